"""Sparse multivariate polynomials with complex coefficients.

Terms are stored as ``{exponent tuple: coefficient}`` over an ordered tuple
of variable names.  Zero coefficients are never stored.  Canonical term
order is graded lexicographic (highest total degree first, ties broken by
the declared variable order).
"""
from __future__ import annotations

import math
import re
from typing import Iterable, Mapping, Sequence

import numpy as np

from .mapping import Layout, MappingHandle, PolySpace, Vector


class PolySyntaxError(ValueError):
    def __init__(self, msg, pos=None):
        super().__init__(msg if pos is None else f"{msg} at position {pos}")
        self.pos = pos


def grlex_key(e):
    return (-sum(e), tuple(-x for x in e))


def _merge_vars(a: Sequence[str], b: Sequence[str]) -> tuple:
    out = list(a)
    out += [v for v in b if v not in out]
    return tuple(out)


class SparsePoly:
    __slots__ = ("variables", "terms")

    def __init__(self, variables: Sequence[str], terms: Mapping[tuple, complex] = ()):
        self.variables = tuple(variables)
        n = len(self.variables)
        clean = {}
        for e, c in dict(terms).items():
            e = tuple(int(x) for x in e)
            if len(e) != n or min(e, default=0) < 0:
                raise ValueError(f"bad exponent tuple {e} for variables {self.variables}")
            c = complex(c)
            if c != 0:
                clean[e] = clean.get(e, 0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}

    # -- construction helpers
    @classmethod
    def constant(cls, c, variables=()):
        return cls(variables, {(0,) * len(variables): c})

    @classmethod
    def monomial(cls, variables, exps, coeff=1.0):
        return cls(variables, {tuple(exps): coeff})

    @classmethod
    def from_coeffs(cls, support: Sequence[tuple], coeffs, variables):
        return cls(variables, {tuple(t): c for t, c in zip(support, coeffs)})

    @classmethod
    def univariate(cls, coeffs_desc, var="x"):
        """From coefficients listed highest degree first."""
        d = len(coeffs_desc) - 1
        return cls((var,), {(d - i,): c for i, c in enumerate(coeffs_desc)})

    def with_variables(self, variables: Sequence[str]) -> "SparsePoly":
        variables = tuple(variables)
        if variables == self.variables:
            return self
        missing = [v for v in self.variables if v not in variables]
        for v in missing:
            i = self.variables.index(v)
            if any(e[i] for e in self.terms):
                raise ValueError(f"variable {v!r} not in {variables}")
        pos = [self.variables.index(v) if v in self.variables else None for v in variables]
        terms = {tuple(0 if p is None else e[p] for p in pos): c for e, c in self.terms.items()}
        return SparsePoly(variables, terms)

    # -- inspection
    def support(self) -> list:
        return sorted(self.terms, key=grlex_key)

    def coeffs(self, support=None) -> np.ndarray:
        support = self.support() if support is None else support
        return np.array([self.terms.get(tuple(t), 0) for t in support], dtype=complex)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def is_zero(self):
        return not self.terms

    def norm(self) -> float:
        return math.sqrt(math.fsum(abs(c) ** 2 for c in self.terms.values()))

    def leading(self):
        """(exponents, coefficient) of the first term in canonical order."""
        e = self.support()[0]
        return e, self.terms[e]

    def __eq__(self, other):
        if not isinstance(other, SparsePoly):
            other = SparsePoly.constant(other, self.variables)
        v = _merge_vars(self.variables, other.variables)
        return self.with_variables(v).terms == other.with_variables(v).terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"SparsePoly({format_poly(self)!r}, vars={self.variables})"

    def __str__(self):
        return format_poly(self)

    # -- arithmetic
    def _coerce(self, other):
        if isinstance(other, SparsePoly):
            v = _merge_vars(self.variables, other.variables)
            return self.with_variables(v), other.with_variables(v)
        return self, SparsePoly.constant(other, self.variables)

    def __add__(self, other):
        a, b = self._coerce(other)
        t = dict(a.terms)
        for e, c in b.terms.items():
            t[e] = t.get(e, 0) + c
        return SparsePoly(a.variables, t)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        a, b = self._coerce(other)
        t = dict(a.terms)
        for e, c in b.terms.items():
            t[e] = t.get(e, 0) - c
        return SparsePoly(a.variables, t)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, SparsePoly):
            return SparsePoly(self.variables, {e: c * other for e, c in self.terms.items()})
        a, b = self._coerce(other)
        t = {}
        for e1, c1 in a.terms.items():
            for e2, c2 in b.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return SparsePoly(a.variables, t)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / complex(c))

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers")
        out = SparsePoly.constant(1, self.variables)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def diff(self, var) -> "SparsePoly":
        i = self.variables.index(var) if isinstance(var, str) else int(var)
        t = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                t[tuple(e2)] = c * e[i]
        return SparsePoly(self.variables, t)

    def __call__(self, *point):
        if len(point) == 1 and np.ndim(point[0]) == 1:
            point = tuple(point[0])
        return poly_eval(self, point)


def poly_arith(op: str, operands: Iterable[SparsePoly]) -> SparsePoly:
    ops = list(operands)
    if not ops:
        raise ValueError("no operands")
    out = ops[0]
    for q in ops[1:]:
        if op == "add":
            out = out + q
        elif op == "sub":
            out = out - q
        elif op == "mul":
            out = out * q
        else:
            raise ValueError(f"unknown operation {op!r}")
    return out


def _csum(values) -> complex:
    vals = sorted(values, key=abs)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


def poly_eval(p: SparsePoly, point) -> complex:
    point = [complex(v) for v in point]
    if len(point) != len(p.variables):
        raise ValueError(f"point has {len(point)} entries, polynomial has {len(p.variables)} variables")
    vals = []
    for e, c in p.terms.items():
        m = c
        for x, k in zip(point, e):
            if k:
                m *= x ** k
        vals.append(m)
    return _csum(vals)


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?(?P<imag>[ij](?![A-Za-z0-9_]))?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*^(){}])
""", re.VERBOSE)


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolySyntaxError(f"unexpected character {text[pos]!r}", pos)
        for kind in ("num", "name", "op"):
            if m.group(kind) is not None:
                out.append((kind, m.group(0), pos))
                break
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, variables):
        self.toks = _tokenize(text)
        self.i = 0
        self.vars = tuple(variables)

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        t = self.toks[self.i]
        if value is not None and t[1] != value:
            raise PolySyntaxError(f"expected {value!r}, found {t[1] or 'end of input'!r}", t[2])
        self.i += 1
        return t

    def parse(self):
        p = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise PolySyntaxError(f"unexpected {t[1]!r}", t[2])
        return p

    def expr(self):
        sign = 1
        if self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
        p = self.term() * sign
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.power()
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] == "*":
                self.take()
                p = p * self.power()
            elif t[0] in ("num", "name") or (t[0] == "op" and t[1] in ("(", "{")):
                p = p * self.power()
            else:
                return p

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            t = self.peek()
            if t[1] == "{":
                self.take()
                k = self._int()
                self.take("}")
            else:
                k = self._int()
            base = base ** k
        return base

    def _int(self):
        t = self.take()
        if t[0] != "num" or not t[1].isdigit():
            raise PolySyntaxError(f"expected integer exponent, found {t[1]!r}", t[2])
        return int(t[1])

    def atom(self):
        t = self.take()
        if t[0] == "num":
            s = t[1]
            if s[-1] in "ij":
                return SparsePoly.constant(complex(0, float(s[:-1])), self.vars)
            return SparsePoly.constant(float(s), self.vars)
        if t[0] == "name":
            if t[1] not in self.vars:
                raise PolySyntaxError(f"unknown variable {t[1]!r}", t[2])
            e = [0] * len(self.vars)
            e[self.vars.index(t[1])] = 1
            return SparsePoly.monomial(self.vars, e)
        if t[0] == "op" and t[1] in ("(", "{"):
            close = ")" if t[1] == "(" else "}"
            p = self.expr()
            self.take(close)
            return p
        raise PolySyntaxError(f"unexpected {t[1] or 'end of input'!r}", t[2])


def find_variables(text: str) -> tuple:
    """Identifiers in order of first appearance (imaginary unit suffixes excluded)."""
    seen = []
    for kind, val, _ in _tokenize(text):
        if kind == "name" and val not in seen:
            seen.append(val)
    return tuple(seen)


def parse_poly(text: str, variables: Sequence[str] | None = None) -> SparsePoly:
    """Parse a polynomial string such as ``"4.899*x^3*y - 2 x^2 + 1"``.

    Multiplication is ``*`` or juxtaposition; ``^`` takes a nonnegative
    integer (optionally braced, ``x^{14}``).  A number directly followed by
    ``i`` or ``j`` is imaginary.
    """
    if variables is None:
        variables = tuple(sorted(find_variables(text)))
    return _Parser(text, variables).parse()


def parse_support(text: str, variables: Sequence[str]) -> list:
    """Comma-separated monomials, e.g. ``"1, y*z, x^5"``."""
    out = []
    for item in text.split(","):
        p = parse_poly(item, variables)
        if len(p.terms) != 1:
            raise PolySyntaxError(f"{item!r} is not a monomial")
        out.append(next(iter(p.terms)))
    return out


def _num(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def _fmt_coeff(c: complex) -> str:
    im = _num(c.imag) + "i"
    if c.real == 0:
        return im
    return f"({_num(c.real)}{'' if im[0] == '-' else '+'}{im})"


def format_poly(p: SparsePoly) -> str:
    """Canonical text form; ``parse_poly(format_poly(p), p.variables) == p``."""
    if not p.terms:
        return "0"
    parts = []
    for e in p.support():
        c = p.terms[e]
        mono = "*".join(v if k == 1 else f"{v}^{k}" for v, k in zip(p.variables, e) if k)
        if c.imag == 0:
            sign = "-" if c.real < 0 else "+"
            mag = _num(abs(c.real))
            body = mag if not mono else (mono if mag == "1" else f"{mag}*{mono}")
        elif c.real == 0:
            sign = "-" if c.imag < 0 else "+"
            body = _num(abs(c.imag)) + "i" + (f"*{mono}" if mono else "")
        else:
            sign = "+"
            body = _fmt_coeff(c) + (f"*{mono}" if mono else "")
        parts.append((sign, body))
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        s += f" {sign} {body}"
    return s


# ------------------------------------------------------------ polynomial systems

class _Compiled:
    """Vectorised evaluator for one polynomial."""

    def __init__(self, p: SparsePoly):
        sup = list(p.terms)
        self.exps = np.array(sup, dtype=int).reshape(len(sup), len(p.variables))
        self.coeffs = np.array([p.terms[e] for e in sup], dtype=complex)

    def __call__(self, x):
        if self.coeffs.size == 0:
            return 0j
        vals = self.coeffs * np.prod(np.power(x[None, :], self.exps), axis=1)
        return _csum(vals)


class PolynomialMapping(MappingHandle):
    """Mapping ``C^n -> C^m`` given by a list of polynomials."""

    def __init__(self, system: Sequence[SparsePoly], variables: Sequence[str], name=""):
        variables = tuple(variables)
        self.system = [p.with_variables(variables) for p in system]
        self.variables = variables
        self.partials = [[p.diff(i) for i in range(len(variables))] for p in self.system]
        self._f = [_Compiled(p) for p in self.system]
        self._j = [[_Compiled(d) for d in row] for row in self.partials]
        n, m = len(variables), len(self.system)
        super().__init__(Layout(Vector(n)), Layout(Vector(m)),
                         eval=self._eval, jac=self._jac, name=name)

    def _eval(self, x):
        x = np.asarray(x, dtype=complex)
        return np.array([f(x) for f in self._f], dtype=complex)

    def _jac(self, x):
        x = np.asarray(x, dtype=complex)
        return np.array([[d(x) for d in row] for row in self._j], dtype=complex)


def poly_system_jacobian(system: Sequence[SparsePoly], variables: Sequence[str] | None = None) -> PolynomialMapping:
    if not system:
        raise ValueError("empty polynomial system")
    if variables is None:
        variables = system[0].variables
        for p in system[1:]:
            variables = _merge_vars(variables, p.variables)
    return PolynomialMapping(system, variables)


def parse_system(text: str) -> PolynomialMapping:
    """System file: a line of variable names, then one polynomial per line.

    Blank lines and ``#`` comments are skipped; a line ending in ``\\``
    continues on the next one.
    """
    lines = []
    buf = ""
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].rstrip()
        if line.endswith("\\"):
            buf += line[:-1] + " "
            continue
        line = (buf + line).strip()
        buf = ""
        if line:
            lines.append(line)
    if len(lines) < 2:
        raise PolySyntaxError("system file needs a variable line and at least one polynomial")
    variables = tuple(v for v in re.split(r"[,\s]+", lines[0]) if v)
    return poly_system_jacobian([parse_poly(s, variables) for s in lines[1:]], variables)


# ------------------------------------------------------------ supports & products

def total_degree_support(variables: Sequence[str], deg: int) -> list:
    """All monomials of total degree <= deg, in canonical order."""
    n = len(variables)
    out = []

    def rec(prefix, left):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for k in range(left, -1, -1):
            rec(prefix + [k], left - k)

    rec([], deg)
    return sorted(out, key=grlex_key)


def product_support(*supports) -> set:
    acc = {tuple(0 for _ in supports[0][0])}
    for sup in supports:
        acc = {tuple(a + b for a, b in zip(x, y)) for x in acc for y in sup}
    return acc


def multiplication_matrix(a: SparsePoly, domain: PolySpace, codomain: PolySpace) -> np.ndarray:
    """Matrix of ``u -> a*u`` from ``domain`` into ``codomain`` coordinates."""
    a = a.with_variables(domain.variables)
    M = np.zeros((codomain.size, domain.size), dtype=complex)
    for j, t in enumerate(domain.support):
        for e, c in a.terms.items():
            M[codomain.index[tuple(x + y for x, y in zip(e, t))], j] += c
    return M
