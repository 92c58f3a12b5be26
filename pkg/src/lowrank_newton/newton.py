"""Rank-r Newton iteration.

Each step replaces the Jacobian by its nearest rank-r matrix and applies the
Moore-Penrose inverse of that projection::

    x_{j+1} = x_j - J(x_j)_{rank-r}^+ f(x_j)

With ``r`` equal to the full column rank this is plain Newton (square,
nonsingular) or Gauss-Newton (overdetermined).  With smaller ``r`` it
converges to points on positive-dimensional zero sets; on perturbed data it
converges to a stationary point where the projected step vanishes while the
residual stays at the level of the data error.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg_core import GAP_WARN, RankDeficiencyError, pinv_apply, rank_r_project
from .mapping import MappingHandle

CONVERGED_ZERO = "converged-zero"
CONVERGED_STATIONARY = "converged-stationary"
MAX_STEPS = "max-steps"
DIVERGED = "diverged"

PLATEAU = 0.01


class NewtonError(ArithmeticError):
    def __init__(self, msg, trace=None, step=None):
        super().__init__(msg)
        self.trace = trace
        self.step = step


class NewtonRankError(NewtonError):
    pass


class NewtonDivergence(NewtonError):
    pass


@dataclass
class NewtonOptions:
    rank: Optional[int] = None
    max_steps: int = 50
    shift_tol: Optional[float] = None
    residual_tol: Optional[float] = None
    trace: bool = False

    def __post_init__(self):
        if self.rank is not None and self.rank < 1:
            raise ValueError("projection rank must be >= 1")
        for name in ("shift_tol", "residual_tol"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 0:
            raise ValueError("max_steps must be nonnegative")


def format_step(step: int, residual: float, shift: Optional[float] = None) -> str:
    if shift is None:
        return "Step %4d:  residual = %9.2e" % (step, residual)
    return "Step %4d:  residual = %9.2e    shift = %9.2e" % (step, residual, shift)


@dataclass
class IterationTrace:
    """Record of one rank-r Newton run.

    ``residuals[j]`` is ``||f(x_j)||`` for j = 0..steps and ``shifts[j-1]`` is
    ``||x_j - x_{j-1}||`` for j = 1..steps.  At the final iterate,
    ``pinv_norm`` is ``||J(x)_{rank-r}^+||_2 = 1/sigma_r``, ``condition`` the
    scale-free ``sigma_1 / sigma_r`` and ``gap`` the ratio
    ``sigma_r / sigma_{r+1}``.
    """

    rank: int
    residuals: list = field(default_factory=list)
    shifts: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    status: str = MAX_STEPS
    condition: float = float("nan")
    gap: float = float("nan")
    sigma: Optional[np.ndarray] = None
    point: object = None

    @property
    def steps(self) -> int:
        return len(self.shifts)

    @property
    def z(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def residual(self) -> float:
        return self.residuals[-1]

    @property
    def converged(self) -> bool:
        return self.status in (CONVERGED_ZERO, CONVERGED_STATIONARY)

    @property
    def pinv_norm(self) -> float:
        if self.sigma is None:
            return float("nan")
        s = self.sigma[self.rank - 1]
        return float(1.0 / s) if s > 0 else float("inf")

    @property
    def rank_gap_warning(self) -> bool:
        return bool(self.gap < GAP_WARN)

    def lines(self) -> list:
        out = [format_step(0, self.residuals[0])]
        for j, s in enumerate(self.shifts, 1):
            out.append(format_step(j, self.residuals[j], s))
        return out

    def __str__(self):
        return "\n".join(self.lines())


def _check_finite(v, what, trace, step):
    if not np.all(np.isfinite(v)):
        trace.status = DIVERGED
        raise NewtonDivergence(f"non-finite {what} at step {step}", trace=trace, step=step)


def _project(J, r, trace, step):
    if not np.all(np.isfinite(J)):
        trace.status = DIVERGED
        raise NewtonDivergence(f"non-finite Jacobian at step {step}", trace=trace, step=step)
    try:
        P = rank_r_project(J, r)
    except RankDeficiencyError:
        P = None
    # sigma_r indistinguishable from zero in double precision
    if P is None or P.s[-1] <= max(J.shape) * np.finfo(float).eps * P.sigma[0]:
        sr = 0.0 if P is None else P.s[-1]
        raise NewtonRankError(f"Jacobian rank fell below {r} at step {step} (sigma_{r} = {sr:.3e})",
                              trace=trace, step=step)
    return P


def rank_r_newton(f: MappingHandle, x0, opts: NewtonOptions | None = None, *,
                  stream=None, **kw) -> IterationTrace:
    """Run the rank-r Newton iteration on ``f`` from the structured point ``x0``.

    Keyword arguments not given through ``opts`` are forwarded to
    :class:`NewtonOptions` (``rank``, ``max_steps``, ``shift_tol``, ...).
    Without a rank, the full column rank ``min(m, n)`` is used.

    Termination:

    * ``converged-zero`` once ``||f(x_j)|| <= residual_tol``;
    * ``converged-stationary`` once two consecutive shifts are
      ``<= shift_tol`` and the last residual changed by at most 1%;
    * ``max-steps`` otherwise.
    """
    opts = NewtonOptions(**kw) if opts is None else opts
    n, m = f.domain.total_dim, f.codomain.total_dim
    r = min(m, n) if opts.rank is None else opts.rank
    if r > min(m, n):
        raise ValueError(f"projection rank {r} exceeds min(codomain, domain) = {min(m, n)}")
    out = stream if stream is not None else sys.stdout

    z = f.domain.embed(x0).astype(complex)
    trace = IterationTrace(rank=r)
    shift_tol = opts.shift_tol or 1e-14 * max(1.0, float(np.linalg.norm(z)))
    Fz = f.F(z)
    _check_finite(Fz, "residual", trace, 0)
    res = float(np.linalg.norm(Fz))
    residual_tol = opts.residual_tol or 1e-12 * (1.0 + res)
    trace.residuals.append(res)
    trace.iterates.append(z)
    if opts.trace:
        print(format_step(0, res), file=out)

    small = 0
    if res <= residual_tol:
        trace.status = CONVERGED_ZERO
    else:
        for step in range(1, opts.max_steps + 1):
            J = f.J(z)
            P = _project(J, r, trace, step - 1)
            dz = pinv_apply(P, Fz)
            z = z - dz
            _check_finite(z, "iterate", trace, step)
            Fz = f.F(z)
            _check_finite(Fz, "residual", trace, step)
            prev, res = res, float(np.linalg.norm(Fz))
            shift = float(np.linalg.norm(dz))
            trace.residuals.append(res)
            trace.shifts.append(shift)
            trace.iterates.append(z)
            if opts.trace:
                print(format_step(step, res, shift), file=out)
            if res <= residual_tol:
                trace.status = CONVERGED_ZERO
                break
            small = small + 1 if shift <= shift_tol else 0
            plateau = abs(res - prev) <= PLATEAU * prev
            if shift == 0.0 or (small >= 2 and plateau):
                trace.status = CONVERGED_STATIONARY
                break
        else:
            trace.status = MAX_STEPS

    _finish(f, trace, z, r)
    return trace


def _finish(f, trace, z, r):
    trace.point = f.domain.extract(z)
    J = f.J(z)
    if not np.all(np.isfinite(J)):
        return
    s = np.linalg.svd(J, compute_uv=False)
    trace.sigma = s
    trace.condition = float(s[0] / s[r - 1]) if s[r - 1] > 0 else float("inf")
    if r == s.size or s[r] == 0:
        trace.gap = float("inf")
    else:
        trace.gap = float(s[r - 1] / s[r])


def condition_estimate(f: MappingHandle, x, r: int, relative: bool = False) -> float:
    """``||J(x)_{rank-r}^+||_2 = 1 / sigma_r``.

    With ``relative=True`` the scale-free ``sigma_1 / sigma_r`` reported as
    ``IterationTrace.condition``.
    """
    J = f.J(f.domain.embed(x))
    s = np.linalg.svd(J, compute_uv=False)
    if r > s.size or not s[r - 1] > 0:
        raise RankDeficiencyError(f"Jacobian rank is below {r}", rank=r, sigma=s)
    return float((s[0] if relative else 1.0) / s[r - 1])


def quadratic_ratios(shifts, floor: float, last: int = 3) -> list:
    """Ratios ``s_{j+1} / s_j^2`` for the final ``last`` steps whose result lies above ``floor``."""
    s = list(shifts)
    pairs = [(s[j], s[j + 1]) for j in range(len(s) - 1) if s[j + 1] > floor]
    return [b / a ** 2 for a, b in pairs[-last:]]
