"""Singular and rank-deficient linear systems.

One rank-r Newton step on ``x -> A x - b`` from ``x0`` gives

    x = A_r^+ b + (I - A_r^+ A_r) x0,

the point of the affine solution set of the rank-r projected system nearest
to ``x0``.  The kernel of ``A_r`` is spanned by the trailing right singular
vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg_core import as_matrix, numerical_rank, svd
from .mapping import MappingHandle


class LinearSolveError(ArithmeticError):
    pass


class TrivialSolution(LinearSolveError):
    """Homogeneous system whose projected matrix has rank zero."""


class NoSolution(LinearSolveError):
    pass


class NonlinearMapping(ValueError):
    pass


@dataclass
class AffineSolution:
    particular: np.ndarray
    kernel_basis: np.ndarray
    rank_used: int
    condition: float
    residual: float
    singular_values: Optional[np.ndarray] = None

    @property
    def kernel_dim(self) -> int:
        return self.kernel_basis.shape[1]


def general_solve(A, b, rank: Optional[int] = None, theta: Optional[float] = None,
                  x0=None) -> AffineSolution:
    """Solve ``A x = b`` through the rank-r projection of ``A``.

    ``rank`` wins over ``theta``; with only ``theta`` the rank is the number
    of singular values above ``theta`` (the smallest rank within ``theta`` of
    ``A`` in spectral norm).  With neither, ``theta`` defaults to
    ``max(m, n) * eps * sigma_1``.
    The right-hand side is effectively replaced by its orthogonal projection
    onto the range of ``A_r``; ``residual`` reports ``||A x - b||`` against the
    given data.
    """
    A = as_matrix(A)
    m, n = A.shape
    b = np.asarray(b, dtype=complex).reshape(-1)
    if b.shape[0] != m:
        raise ValueError(f"right-hand side has length {b.shape[0]}, matrix has {m} rows")
    x0 = np.zeros(n, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex).reshape(-1)
    if x0.shape[0] != n:
        raise ValueError(f"x0 has length {x0.shape[0]}, matrix has {n} columns")

    f = svd(A, full_matrices=True)
    s = f.s
    if rank is None:
        if theta is None:
            theta = max(m, n) * np.finfo(float).eps * s[0]
        rank = numerical_rank(A, theta)
    if rank < 0 or rank > min(m, n):
        raise ValueError(f"rank {rank} outside [0, {min(m, n)}]")
    if rank == 0:
        if np.any(b):
            raise NoSolution("projected matrix is zero but the right-hand side is not")
        raise TrivialSolution("projected matrix is zero; every vector solves the system")
    if not s[rank - 1] > 0:
        raise LinearSolveError(f"requested rank {rank} exceeds the rank of the matrix")

    U = f.U[:, :rank]
    V = f.Vh[:rank].conj().T
    sr = s[:rank]
    xp = V @ ((U.conj().T @ b) / sr)
    x = xp + x0 - V @ (V.conj().T @ x0)
    K = f.Vh[rank:].conj().T
    return AffineSolution(
        particular=x,
        kernel_basis=K,
        rank_used=rank,
        condition=float(1.0 / sr[-1]),
        residual=float(np.linalg.norm(A @ x - b)),
        singular_values=s,
    )


def operator_matrix(L: MappingHandle, probes: int = 2, seed: int = 0, tol: float = 1e-10) -> np.ndarray:
    """Matrix of a linear mapping in its layout coordinates.

    Linearity is spot-checked on random probes: ``L(u+v) = L(u) + L(v)``
    and ``L(0) = 0`` to ``tol`` relative.
    """
    n = L.domain.total_dim
    cols = []
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        cols.append(L.F(e))
    M = np.column_stack(cols)
    rng = np.random.default_rng(seed)
    scale = max(1.0, float(np.linalg.norm(M)))
    if np.linalg.norm(L.F(np.zeros(n, dtype=complex))) > tol * scale:
        raise NonlinearMapping("mapping does not send 0 to 0")
    for _ in range(probes):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lhs = L.F(u + v)
        if np.linalg.norm(lhs - L.F(u) - L.F(v)) > tol * scale * (np.linalg.norm(u) + np.linalg.norm(v)):
            raise NonlinearMapping("additivity check failed; mapping is not linear")
        if np.linalg.norm(lhs - M @ (u + v)) > tol * scale * np.linalg.norm(u + v):
            raise NonlinearMapping("mapping disagrees with its basis-vector matrix")
    return M


@dataclass
class OperatorSolution:
    particular: object
    kernel: list
    solution: AffineSolution

    @property
    def kernel_dim(self):
        return len(self.kernel)


def operator_solve(L: MappingHandle, b, theta: Optional[float] = None, x0=None,
                   rank: Optional[int] = None) -> OperatorSolution:
    """``LinearSolve`` for a linear mapping between structured spaces."""
    M = operator_matrix(L)
    bz = L.codomain.embed(b)
    z0 = None if x0 is None else L.domain.embed(x0)
    sol = general_solve(M, bz, rank=rank, theta=theta, x0=z0)
    kernel = [L.domain.extract(sol.kernel_basis[:, j]) for j in range(sol.kernel_dim)]
    return OperatorSolution(L.domain.extract(sol.particular), kernel, sol)


@dataclass
class BoundReport:
    """Error-bound diagnostics evaluated with computed norms in place of exact ones.

    ``solution_bound`` bounds the relative error of a backward accurate
    solution; ``affine_bound`` bounds both the particular-solution error and
    the kernel distance for the projected system.  ``valid`` is False when the
    data perturbation violates ``||dA|| < 0.46 / ||A^+||``.
    """

    valid: bool
    message: str
    solution_bound: float
    affine_bound: float
    norm_A: float
    norm_pinv: float


def error_bound_report(A, b, solution: AffineSolution, dA: float = 0.0, db: float = 0.0) -> BoundReport:
    A = as_matrix(A)
    b = np.asarray(b, dtype=complex).reshape(-1)
    s = solution.singular_values if solution.singular_values is not None else svd(A).s
    r = solution.rank_used
    nA = float(s[0])
    nP = float(1.0 / s[r - 1])
    if dA * nP >= 0.46:
        return BoundReport(False, "perturbation too large", math.inf, math.inf, nA, nP)

    e = float(np.linalg.norm(A @ solution.particular - b))
    nb = float(np.linalg.norm(b))
    kappa = nA * nP
    if dA == 0 and db + e == 0:
        sol_bound = 0.0
    else:
        sol_bound = kappa / (1.0 - nP * dA) * (2 * math.sqrt(2) * dA / nA + (db + e) / nb)

    # ||A^+ b|| estimated by the minimum-norm solution of the projected system
    xmin = general_solve(A, b, rank=r).particular
    aff = kappa * math.sqrt(4 * float(np.linalg.norm(xmin)) ** 2 + 1) / (nA - kappa * dA) * math.hypot(dA, db)
    return BoundReport(True, "ok", sol_bound, aff, nA, nP)
