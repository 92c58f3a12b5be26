"""Refinement of a structured factorization ``u0 * u1^l1 * ... * uk^lk``.

The factors live in user-declared hosting spaces (monomial supports); the
scalar ``u0`` lives in C.  The zero set carries a k-dimensional scaling gauge,
so the Jacobian there has rank ``dim(U0 x ... x Uk) - k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .mapping import Layout, MappingHandle, PolySpace, Scalar
from .newton import IterationTrace, NewtonOptions, rank_r_newton
from .poly import SparsePoly, grlex_key, multiplication_matrix, product_support


class HostingSpaceError(ValueError):
    pass


@dataclass
class FactorStructure:
    exponents: tuple
    supports: tuple
    variables: tuple

    def __post_init__(self):
        self.exponents = tuple(int(e) for e in self.exponents)
        self.supports = tuple(tuple(tuple(t) for t in s) for s in self.supports)
        self.variables = tuple(self.variables)
        if len(self.exponents) != len(self.supports):
            raise ValueError("one hosting support per exponent required")
        if any(e < 1 for e in self.exponents):
            raise ValueError("exponents must be positive")

    @property
    def k(self):
        return len(self.exponents)

    def spaces(self):
        return [PolySpace(s, self.variables) for s in self.supports]

    def rank(self) -> int:
        return 1 + sum(len(s) for s in self.supports) - self.k

    @classmethod
    def from_initial(cls, exponents, factors: Sequence[SparsePoly], variables=None):
        """Hosting supports taken as the monomials of the initial factors."""
        if variables is None:
            variables = ()
            for f in factors:
                variables += tuple(v for v in f.variables if v not in variables)
        return cls(exponents, [f.with_variables(variables).support() for f in factors], variables)


@dataclass
class FactorArray:
    u0: complex
    factors: list
    condition: float = float("nan")
    residual: float = float("nan")
    trace: Optional[IterationTrace] = field(default=None, repr=False)

    def product(self, exponents) -> SparsePoly:
        out = SparsePoly.constant(self.u0, self.factors[0].variables)
        for u, e in zip(self.factors, exponents):
            out = out * u ** e
        return out


def check_hosting(structure: FactorStructure, factors: Sequence[SparsePoly]):
    """Reject factors outside their supports or supports that are not proper.

    A support is improper for ``u`` when a nonconstant monomial ``s`` has
    ``s * supp(u)`` inside the support, since then ``s u`` also lives there.
    """
    for j, (u, sup) in enumerate(zip(factors, structure.supports)):
        u = u.with_variables(structure.variables)
        if u.is_zero():
            raise HostingSpaceError(f"factor {j + 1} is zero")
        inside = set(sup)
        outside = [e for e in u.terms if e not in inside]
        if outside:
            raise HostingSpaceError(f"factor {j + 1} has terms {outside} outside its hosting space")
        terms = list(u.terms)
        t0 = terms[0]
        for e in sup:
            s = tuple(a - b for a, b in zip(e, t0))
            if min(s) < 0 or not any(s):
                continue
            if all(tuple(a + b for a, b in zip(t, s)) in inside for t in terms):
                raise HostingSpaceError(
                    f"hosting space of factor {j + 1} is not proper: it also contains "
                    f"the multiple by monomial exponent {s}")


def factor_mapping(p: SparsePoly, structure: FactorStructure) -> MappingHandle:
    """``(u0, u1, ..., uk) -> u0 * prod(uj^lj) - p`` with its exact Jacobian."""
    variables = structure.variables
    p = p.with_variables(variables)
    spaces = structure.spaces()
    sup = product_support(*[s for s, e in zip(structure.supports, structure.exponents) for _ in range(e)])
    P = PolySpace(sorted(sup | set(p.terms), key=grlex_key), variables)
    ells = structure.exponents

    def ev(x):
        u0, *us = x
        out = SparsePoly.constant(u0, variables)
        for u, e in zip(us, ells):
            out = out * u ** e
        return out - p

    def jac(x):
        u0, *us = x
        pw = [u ** e for u, e in zip(us, ells)]
        cols = []
        prod_all = SparsePoly.constant(1.0, variables)
        for q in pw:
            prod_all = prod_all * q
        cols.append(P.embed(prod_all)[:, None])
        for i, (u, e, Ui) in enumerate(zip(us, ells, spaces)):
            d = SparsePoly.constant(u0 * e, variables) * u ** (e - 1)
            for j, q in enumerate(pw):
                if j != i:
                    d = d * q
            cols.append(multiplication_matrix(d, Ui, P))
        return np.hstack(cols)

    return MappingHandle(Layout(Scalar(), *spaces), Layout(P), eval=ev, jac=jac, name="factor")


def gauge_normalize(arr: FactorArray, exponents) -> FactorArray:
    """Unit-norm factors with positive real first coefficient; ``u0`` compensates."""
    u0 = complex(arr.u0)
    out = []
    for u, e in zip(arr.factors, exponents):
        if u.is_zero():
            raise HostingSpaceError("zero factor")
        _, lead = u.leading()
        t = abs(lead) / (lead * u.norm())
        out.append(u * t)
        u0 /= t ** e
    return FactorArray(u0, out, arr.condition, arr.residual, arr.trace)


def factor_refine(p: SparsePoly, structure: FactorStructure, initial: FactorArray,
                  opts: Optional[NewtonOptions] = None, rank: Optional[int] = None) -> FactorArray:
    """Rank-r Newton on the factorization equation from ``initial``.

    The returned array is the raw limit of the iteration (not gauge
    normalized).
    """
    factors = [u.with_variables(structure.variables) for u in initial.factors]
    if len(factors) != structure.k:
        raise ValueError(f"expected {structure.k} initial factors, got {len(factors)}")
    check_hosting(structure, factors)
    f = factor_mapping(p, structure)
    r = structure.rank() if rank is None else rank
    opts = NewtonOptions(rank=r) if opts is None else NewtonOptions(**{**opts.__dict__, "rank": r})
    trace = rank_r_newton(f, (complex(initial.u0), *factors), opts)
    u0, *us = trace.point
    return FactorArray(u0, list(us), condition=trace.condition, residual=trace.residual,
                      trace=trace)
