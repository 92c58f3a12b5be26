"""Defective eigenvalues from empirical matrices.

An eigenvalue with geometric multiplicity ``m`` and smallest Jordan block
size ``k`` solves ``A X - lam X - X S = 0`` for ``X`` in C^{n x k}, where ``S``
is strictly upper triangular with a nonzero superdiagonal.  The solution set
in ``(lam, X)`` has dimension ``m k`` and the Jacobian there has rank
``1 + (n - m) k``, so the rank-r Newton iteration with that ``r`` recovers the
eigenvalue from perturbed data.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg_core import as_matrix, thin_qr
from .linear_solve import operator_solve
from .mapping import Layout, Matrix, MappingHandle, Scalar
from .newton import IterationTrace, NewtonOptions, rank_r_newton


class SupportMismatch(ValueError):
    """Kernel dimension at the initial estimate differs from m*k."""


@dataclass(frozen=True)
class MultiplicitySupport:
    m: int
    k: int

    def check(self, n: int):
        if self.m < 1 or self.k < 1 or self.m * self.k > n:
            raise ValueError(f"invalid multiplicity support {self.m}x{self.k} for n={n}")

    def rank(self, n: int) -> int:
        return 1 + (n - self.m) * self.k


def shift_matrix(k: int) -> np.ndarray:
    """Default ``S``: ones on the superdiagonal, zeros elsewhere."""
    return np.eye(k, k, 1, dtype=complex)


def check_shift_matrix(S) -> np.ndarray:
    S = np.asarray(S, dtype=complex)
    k = S.shape[0]
    if S.shape != (k, k):
        raise ValueError("S must be square")
    if np.any(np.tril(S) != 0):
        raise ValueError("S must vanish on and below the diagonal")
    if k > 1 and np.prod(np.diag(S, 1)) == 0:
        raise ValueError("S needs a nonzero superdiagonal chain")
    return S


def eig_equation_operator(A, lam0, S) -> MappingHandle:
    """Linear map ``X -> A X - lam0 X - X S`` on n-by-k matrices."""
    A = as_matrix(A)
    n, k = A.shape[0], S.shape[0]
    return MappingHandle(Layout(Matrix(n, k)), Layout(Matrix(n, k)),
                         eval=lambda X: A @ X - lam0 * X - X @ S,
                         jac=lambda X: np.kron(A - lam0 * np.eye(n), np.eye(k))
                         - np.kron(np.eye(n), S.T),
                         name="eigen-operator")


def eig_mapping(A, S) -> MappingHandle:
    """``(lam, X) -> A X - lam X - X S`` with its exact Jacobian."""
    A = as_matrix(A)
    S = np.asarray(S, dtype=complex)
    n, k = A.shape[0], S.shape[0]
    base = np.kron(A, np.eye(k)) - np.kron(np.eye(n), S.T)
    eye = np.eye(n * k)

    def ev(p):
        lam, X = p
        return A @ X - lam * X - X @ S

    def jac(p):
        lam, X = p
        return np.column_stack([-X.reshape(-1), base - lam * eye])

    return MappingHandle(Layout(Scalar(), Matrix(n, k)), Layout(Matrix(n, k)),
                         eval=ev, jac=jac, name="eigenequation")


def eig_initialize(A, lam0, support: MultiplicitySupport, theta: float,
                   S=None, seed: int = 0) -> np.ndarray:
    """``X0`` as a random combination of the kernel of ``X -> (A - lam0 I) X - X S``.

    The kernel is computed with tolerance ``theta``; its dimension must equal
    ``m*k``.  The combination has unit-norm coefficients, so ``||X0||_F = 1``.
    """
    A = as_matrix(A)
    n = A.shape[0]
    support.check(n)
    S = shift_matrix(support.k) if S is None else check_shift_matrix(S)
    L = eig_equation_operator(A, lam0, S)
    sol = operator_solve(L, np.zeros((n, support.k)), theta=theta)
    if sol.kernel_dim != support.m * support.k:
        raise SupportMismatch(
            f"kernel dimension {sol.kernel_dim} at tolerance {theta} does not match "
            f"multiplicity support {support.m}x{support.k}")
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(sol.kernel_dim) + 1j * rng.standard_normal(sol.kernel_dim)
    c /= np.linalg.norm(c)
    X0 = sum(ci * K for ci, K in zip(c, sol.kernel))
    thin_qr(X0)  # full column rank or QRRankError
    return X0


@dataclass
class EigResult:
    eigenvalue: complex
    X: np.ndarray
    S: np.ndarray
    condition: float
    residual: float
    trace: IterationTrace
    normalization_trace: Optional[IterationTrace] = None


def defective_eig_refine(A, lam0, X0, support: MultiplicitySupport, S=None,
                         rank: Optional[int] = None, normalize: bool = True,
                         opts: Optional[NewtonOptions] = None) -> EigResult:
    """Refine ``(lam0, X0)`` with rank ``1 + (n-m)k`` Newton.

    After convergence, ``X = QR`` (thin QR), ``S <- R S R^{-1}`` and one more
    Newton step from ``(lam, Q)`` leaves ``X`` with nearly orthonormal columns.
    The reported condition number is taken after that step.
    """
    A = as_matrix(A)
    n = A.shape[0]
    support.check(n)
    S = shift_matrix(support.k) if S is None else check_shift_matrix(S)
    r = support.rank(n) if rank is None else rank
    if opts is None:
        opts = NewtonOptions(rank=r)
    else:
        opts = NewtonOptions(**{**opts.__dict__, "rank": r})

    f = eig_mapping(A, S)
    trace = rank_r_newton(f, (complex(lam0), np.asarray(X0, dtype=complex)), opts)
    lam, X = trace.point
    cond, res = trace.condition, trace.residual
    ntrace = None
    if normalize:
        Q, R = thin_qr(X)
        S = R @ S @ np.linalg.inv(R)
        g = eig_mapping(A, S)
        ntrace = rank_r_newton(g, (lam, Q), NewtonOptions(rank=r, max_steps=1,
                                                          trace=opts.trace))
        lam, X = ntrace.point
        cond, res = ntrace.condition, ntrace.residual
    return EigResult(eigenvalue=lam, X=X, S=S, condition=cond, residual=res,
                     trace=trace, normalization_trace=ntrace)


def defective_eig(A, lam0, m: int, k: int, theta: float, seed: int = 0,
                  rank: Optional[int] = None, opts: Optional[NewtonOptions] = None) -> EigResult:
    support = MultiplicitySupport(m, k)
    X0 = eig_initialize(A, lam0, support, theta, seed=seed)
    return defective_eig_refine(A, lam0, X0, support, rank=rank, opts=opts)
