"""Depth deflation for ultrasingular zeros.

A zero ``x*`` whose Jacobian rank deficiency exceeds the dimension of the
zero set is lifted to a zero ``(x*, y*)`` of

    g(x, y) = (f(x), J(x) y, R y - e)

with ``R`` a random ``(n - r) x n`` matrix, ``r = rank J(x*)`` and ``e != 0``.
The lift is repeated until the zero is regular or semiregular, and the rank-r
Newton iteration on the last expansion then converges at the usual rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .linalg_core import numerical_rank, svd
from .mapping import Layout, MappingHandle, Vector, fd_step
from .newton import IterationTrace, NewtonError, NewtonOptions, rank_r_newton
from .poly import PolynomialMapping, SparsePoly


class DeflationError(ArithmeticError):
    def __init__(self, msg, stages=None, trace=None):
        super().__init__(msg)
        self.stages = stages or []
        self.trace = trace


@dataclass
class DeflationStage:
    level: int
    mapping: MappingHandle
    R: np.ndarray
    e: np.ndarray
    r_used: int
    y0: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.R.shape[1]

    def residuals(self, z, base: MappingHandle) -> tuple:
        """``(||f(x)||, ||J(x) y||, ||R y - e||)`` at coordinates ``z = (x, y)``."""
        z = np.asarray(z, dtype=complex)
        x, y = z[: self.n], z[self.n:]
        return (float(np.linalg.norm(base.F(x))), float(np.linalg.norm(base.J(x) @ y)),
                float(np.linalg.norm(self.R @ y - self.e)))


def _fresh_names(variables, prefix):
    taken = set(variables)
    out = []
    for v in variables:
        name = f"{prefix}{v}"
        while name in taken:
            name += "_"
        taken.add(name)
        out.append(name)
    return tuple(out)


def _polynomial_deflation(f: PolynomialMapping, R, e, level) -> PolynomialMapping:
    xs = f.variables
    ys = _fresh_names(xs, "d" * (level + 1))
    allv = xs + ys
    yp = [SparsePoly.monomial(allv, [int(i == j) for i in range(len(allv))])
          for j in range(len(xs), len(allv))]
    rows = [p.with_variables(allv) for p in f.system]
    for row in f.partials:
        acc = SparsePoly.constant(0.0, allv)
        for d, y in zip(row, yp):
            acc = acc + d.with_variables(allv) * y
        rows.append(acc)
    for k in range(R.shape[0]):
        acc = SparsePoly.constant(-e[k], allv)
        for c, y in zip(R[k], yp):
            acc = acc + SparsePoly.constant(c, allv) * y
        rows.append(acc)
    return PolynomialMapping(rows, allv, name=f"deflation-{level + 1}")


def _generic_deflation(f: MappingHandle, R, e, level) -> MappingHandle:
    n, m = f.domain.total_dim, f.codomain.total_dim
    k = R.shape[0]

    def ev(z):
        x, y = z[:n], z[n:]
        return np.concatenate([f.F(x), f.J(x) @ y, R @ y - e])

    def jac(z):
        x, y = z[:n], z[n:]
        Jx = f.J(x)
        h = fd_step(x)
        D = np.empty((m, n), dtype=complex)
        for j in range(n):
            d = np.zeros(n, dtype=complex)
            d[j] = h
            D[:, j] = (f.J(x + d) @ y - f.J(x - d) @ y) / (2 * h)
        return np.block([[Jx, np.zeros((m, n))], [D, Jx], [np.zeros((k, n)), R]])

    return MappingHandle(Layout(Vector(2 * n)), Layout(Vector(2 * m + k)), eval=ev, jac=jac,
                         name=f"deflation-{level + 1}")


def deflate_step(f: MappingHandle, x_approx, r: int, seed=0, level: int = 0) -> DeflationStage:
    """Expand ``f`` around ``x_approx`` where its Jacobian has rank ``r``.

    ``R`` is complex Gaussian from ``numpy.random.default_rng(seed)`` (a
    Generator may be passed instead) and ``e`` the first unit vector.  ``y0``
    solves ``[J(x); R] y = [0; e]`` in the least-squares sense.
    """
    n = f.domain.total_dim
    if not 0 <= r < n:
        raise ValueError(f"rank {r} leaves nothing to deflate in dimension {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    R = rng.standard_normal((n - r, n)) + 1j * rng.standard_normal((n - r, n))
    e = np.zeros(n - r, dtype=complex)
    e[0] = 1.0
    if isinstance(f, PolynomialMapping):
        g = _polynomial_deflation(f, R, e, level)
    else:
        g = _generic_deflation(f, R, e, level)
    x = f.domain.embed(x_approx).astype(complex)
    A = np.vstack([f.J(x), R])
    y0 = np.linalg.lstsq(A, np.concatenate([np.zeros(A.shape[0] - R.shape[0]), e]), rcond=None)[0]
    return DeflationStage(level, g, R, e, r, y0)


@dataclass
class DeflationResult:
    x: object
    z: np.ndarray
    stages: list
    trace: IterationTrace
    rank: int
    nullity: int
    attempts: list = field(default_factory=list, repr=False)

    @property
    def depth(self) -> int:
        return len(self.stages)

    @property
    def condition(self) -> float:
        return self.trace.condition


def _nullity(h: MappingHandle, z, theta) -> tuple:
    J = h.J(z)
    s = svd(J).s
    rank = numerical_rank(J, theta * max(1.0, float(s[0])))
    return J.shape[1] - rank, rank


def depth_deflation_solve(f: MappingHandle, x0, ranks: Optional[Sequence[int]] = None, dim: int = 0,
                          max_depth: int = 3, theta: float = 1e-8, seed=0,
                          opts: Optional[NewtonOptions] = None) -> DeflationResult:
    """Deflate until the zero near ``x0`` has nullity ``dim``, then solve.

    With ``ranks`` given, level ``i`` is built with Jacobian rank
    ``ranks[i]`` without any detection, and the final expansion is solved by
    rank ``N - dim`` Newton (``N`` its domain dimension).  Without ``ranks``,
    each level first runs rank ``N - dim`` Newton; if that fails or the
    numerical nullity at the reached point (threshold
    ``theta * max(1, sigma_1)``) exceeds ``dim``, the map is deflated there
    with the observed rank and the process repeats.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    base = NewtonOptions() if opts is None else opts
    rng = np.random.default_rng(seed)
    h = f
    z = f.domain.embed(x0).astype(complex)
    stages, attempts = [], []
    n0 = f.domain.total_dim

    def run(h, z):
        N = h.domain.total_dim
        r = N - dim
        if r < 1:
            raise ValueError(f"declared dimension {dim} leaves no rank in dimension {N}")
        o = NewtonOptions(**{**base.__dict__, "rank": r})
        return rank_r_newton(h, h.domain.extract(z), o), r

    def extract(h, t, r):
        nul, _ = _nullity(h, t.z, theta)
        x = f.domain.extract(t.z[:n0])
        return DeflationResult(x, t.z, stages, t, r, nul, attempts)

    if ranks is not None:
        if len(ranks) > max_depth:
            raise ValueError(f"{len(ranks)} deflation levels requested, max_depth is {max_depth}")
        for level, r in enumerate(ranks):
            st = deflate_step(h, h.domain.extract(z), r, rng, level)
            stages.append(st)
            h, z = st.mapping, np.concatenate([z, st.y0])
        try:
            t, r = run(h, z)
        except NewtonError as exc:
            raise DeflationError(f"Newton failed on deflation level {len(stages)}: {exc}",
                                 stages, exc.trace) from exc
        if not t.converged:
            raise DeflationError(f"no convergence on deflation level {len(stages)} ({t.status})",
                                 stages, t)
        return extract(h, t, r)

    for level in range(max_depth + 1):
        try:
            t, r = run(h, z)
        except NewtonError as exc:
            t = exc.trace
        attempts.append(t)
        zt = t.z if t is not None and np.all(np.isfinite(t.z)) else z
        nul, rank = _nullity(h, zt, theta)
        if t is not None and t.converged and nul <= dim:
            return extract(h, t, h.domain.total_dim - dim)
        if level == max_depth:
            break
        if t is not None and t.residual <= t.residuals[0]:
            z = zt
        st = deflate_step(h, h.domain.extract(z), rank, rng, level)
        stages.append(st)
        h, z = st.mapping, np.concatenate([z, st.y0])
    raise DeflationError(f"depth {max_depth} exhausted without regularizing the zero",
                         stages, attempts[-1] if attempts else None)
