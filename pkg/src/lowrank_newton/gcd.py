"""Numerical polynomial GCD via the GCD equation ``(u v - p, u w - q) = 0``.

The solutions ``(t u, v/t, w/t)`` form a one-dimensional set, so the
Jacobian with respect to ``(u, v, w)`` has rank ``dim(domain) - 1`` there
(``m + n - k + 2`` in the univariate case).  The rank-r Newton iteration on
perturbed data converges to a stationary triple approximating an exact one.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .linalg_core import numerical_rank, svd
from .mapping import Layout, MappingHandle, PolySpace
from .newton import IterationTrace, NewtonOptions, rank_r_newton
from .poly import SparsePoly, multiplication_matrix, product_support, grlex_key


class GcdError(ValueError):
    pass


@dataclass
class GcdTriple:
    u: SparsePoly
    v: SparsePoly
    w: SparsePoly
    condition: float = float("nan")
    residual: float = float("nan")
    trace: Optional[IterationTrace] = None

    @property
    def degree(self):
        return self.u.degree()


def _univariate(p: SparsePoly, name="p") -> tuple:
    if len(p.variables) != 1:
        raise GcdError(f"{name} must be univariate (variables {p.variables})")
    d = p.degree()
    if d < 1:
        raise GcdError(f"{name} must have degree >= 1")
    return p.variables[0], d


def coeffs_desc(p: SparsePoly, deg: int) -> np.ndarray:
    return np.array([p.terms.get((deg - i,), 0) for i in range(deg + 1)], dtype=complex)


def conv_matrix(c: np.ndarray, k: int) -> np.ndarray:
    """Matrix of ``u -> c*u`` for ``u`` of degree ``k`` (descending coefficients)."""
    n = c.size
    M = np.zeros((n + k, k + 1), dtype=complex)
    for j in range(k + 1):
        M[j:j + n, j] = c
    return M


def sylvester(p: SparsePoly, q: SparsePoly) -> np.ndarray:
    _, m = _univariate(p, "p")
    _, n = _univariate(q, "q")
    a, b = coeffs_desc(p, m), coeffs_desc(q, n)
    return np.hstack([conv_matrix(a, n - 1), conv_matrix(b, m - 1)])


def gcd_degree_estimate(p: SparsePoly, q: SparsePoly, theta: float = 1e-8) -> int:
    """``m + n - rank`` of the Sylvester matrix, rank taken at ``theta * sigma_1``."""
    S = sylvester(p, q)
    s1 = svd(S).s[0]
    k = S.shape[0] - numerical_rank(S, theta * s1)
    return max(0, min(k, p.degree(), q.degree()))


def gcd_initialize(p: SparsePoly, q: SparsePoly, k: int) -> GcdTriple:
    """Rough triple from the null vector of ``[C_{n-k}(p) | -C_{m-k}(q)]``.

    That null vector holds cofactors ``(w0, v0)`` with ``p w0 = q v0``; ``u0``
    is then the least-squares solution of ``u v0 = p, u w0 = q``.
    """
    x, m = _univariate(p, "p")
    _, n = _univariate(q, "q")
    q = q.with_variables((x,))
    if not 0 <= k <= min(m, n):
        raise GcdError(f"GCD degree {k} outside [0, {min(m, n)}]")
    a, b = coeffs_desc(p, m), coeffs_desc(q, n)
    M = np.hstack([conv_matrix(a, n - k), -conv_matrix(b, m - k)])
    z = svd(M, full_matrices=True).Vh[-1].conj()
    w0, v0 = z[: n - k + 1], z[n - k + 1:]
    lead = max(abs(v0[0]), abs(w0[0]))
    if abs(v0[0]) <= 1e-12 * np.linalg.norm(v0) or abs(w0[0]) <= 1e-12 * np.linalg.norm(w0):
        raise GcdError(f"degenerate cofactor null vector (leading coefficient {lead:.2e})")
    C = np.vstack([conv_matrix(v0, k), conv_matrix(w0, k)])
    u0 = np.linalg.lstsq(C, np.concatenate([a, b]), rcond=None)[0]
    tri = GcdTriple(SparsePoly.univariate(u0, x), SparsePoly.univariate(v0, x),
                    SparsePoly.univariate(w0, x))
    tri.residual = float(np.hypot((tri.u * tri.v - p).norm(), (tri.u * tri.w - q).norm()))
    return tri


def gcd_mapping(p: SparsePoly, q: SparsePoly, U: PolySpace, V: PolySpace, W: PolySpace) -> MappingHandle:
    """``(u, v, w) -> (u v - p, u w - q)`` between polynomial coefficient spaces."""
    variables = U.variables
    p, q = p.with_variables(variables), q.with_variables(variables)
    P = PolySpace(sorted(product_support(U.support, V.support) | set(p.terms), key=grlex_key), variables)
    Qs = PolySpace(sorted(product_support(U.support, W.support) | set(q.terms), key=grlex_key), variables)

    def ev(x):
        u, v, w = x
        return (u * v - p, u * w - q)

    def jac(x):
        u, v, w = x
        top = np.hstack([multiplication_matrix(v, U, P), multiplication_matrix(u, V, P),
                         np.zeros((P.size, W.size))])
        bot = np.hstack([multiplication_matrix(w, U, Qs), np.zeros((Qs.size, V.size)),
                         multiplication_matrix(u, W, Qs)])
        return np.vstack([top, bot])

    return MappingHandle(Layout(U, V, W), Layout(P, Qs), eval=ev, jac=jac, name="gcd")


def normalize_triple(u: SparsePoly, v: SparsePoly, w: SparsePoly):
    """Scale to ``||u|| = 1`` with positive real leading coefficient of ``u``."""
    _, lead = u.leading()
    t = abs(lead) / (lead * u.norm())
    return u * t, v / t, w / t


def gcd_refine(p: SparsePoly, q: SparsePoly, triple0: GcdTriple,
               supports: Optional[Sequence[Sequence[tuple]]] = None,
               opts: Optional[NewtonOptions] = None, rank: Optional[int] = None) -> GcdTriple:
    """Refine a GCD triple with the rank-r Newton iteration.

    Univariate pairs use ``P_k x P_{m-k} x P_{n-k}``; multivariate pairs need
    ``supports`` for ``(u, v, w)``.  The rank is one less than the domain
    dimension unless ``rank`` is given.  The result is reported in the normalized gauge.
    """
    variables = triple0.u.variables
    for poly in (p, q, triple0.v, triple0.w):
        variables = variables + tuple(v for v in poly.variables if v not in variables)
    if supports is None:
        x, m = _univariate(p, "p")
        _, n = _univariate(q, "q")
        k = triple0.u.degree()
        supports = [[(d,) for d in range(e, -1, -1)] for e in (k, m - k, n - k)]
        variables = (x,)
    U, V, W = (PolySpace(s, variables) for s in supports)
    f = gcd_mapping(p, q, U, V, W)
    r = f.domain.total_dim - 1 if rank is None else rank
    opts = NewtonOptions(rank=r) if opts is None else NewtonOptions(**{**opts.__dict__, "rank": r})
    trace = rank_r_newton(f, (triple0.u, triple0.v, triple0.w), opts)
    if trace.rank_gap_warning:
        warnings.warn(f"Jacobian rank gap {trace.gap:.3g} at the refined triple; "
                      f"GCD degree {triple0.u.degree()} may be wrong", RuntimeWarning)
    u, v, w = normalize_triple(*trace.point)
    return GcdTriple(u, v, w, condition=trace.condition, residual=trace.residual, trace=trace)


def numerical_gcd(p: SparsePoly, q: SparsePoly, theta: float = 1e-8, degree: Optional[int] = None,
                  opts: Optional[NewtonOptions] = None, rank: Optional[int] = None) -> GcdTriple:
    """Degree estimate, initialization and refinement in one call."""
    k = gcd_degree_estimate(p, q, theta) if degree is None else degree
    if k == 0:
        x = p.variables[0]
        one = SparsePoly.constant(1.0, (x,))
        tri = GcdTriple(one, p.with_variables((x,)), q.with_variables((x,)))
        return gcd_refine(p, q, tri, opts=opts, rank=rank)
    return gcd_refine(p, q, gcd_initialize(p, q, k), opts=opts, rank=rank)
