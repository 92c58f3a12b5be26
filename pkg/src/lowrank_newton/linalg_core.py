"""Dense complex linear algebra used by the Newton engine.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
The singular value decomposition is delegated to LAPACK through
``numpy.linalg``; the rank-r projection and its pseudoinverse are kept in
factored form so the pseudoinverse matrix is never formed unless asked.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

GAP_WARN = 10.0


class LinalgError(ArithmeticError):
    """Base class for failures in this module."""


class SvdConvergenceError(LinalgError):
    pass


class RankDeficiencyError(LinalgError):
    """Requested projection rank exceeds the numerical rank of the matrix."""

    def __init__(self, msg, rank=None, sigma=None):
        super().__init__(msg)
        self.rank = rank
        self.sigma = sigma


class QRRankError(LinalgError):
    def __init__(self, msg, column):
        super().__init__(msg)
        self.column = column


def as_matrix(a) -> np.ndarray:
    """Validate and convert ``a`` to a 2-D complex array with finite entries."""
    A = np.array(a, dtype=complex)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray
    s: np.ndarray
    Vh: np.ndarray

    @property
    def V(self):
        return self.Vh.conj().T


def svd(A, full_matrices=False) -> SvdFactors:
    A = as_matrix(A)
    try:
        U, s, Vh = np.linalg.svd(A, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(f"SVD did not converge: {exc}") from exc
    return SvdFactors(U, s, Vh)


@dataclass(frozen=True)
class RankRProjection:
    """Truncated SVD ``U_r diag(s_r) V_r^H`` of a matrix.

    ``gap`` is ``s[r-1] / s[r]`` (infinite when ``r`` is the full rank or the
    next singular value vanishes). ``sigma`` holds all singular values of the
    source matrix for diagnostics.
    """

    r: int
    U: np.ndarray
    s: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    gap: float

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[0])

    @property
    def gap_warning(self) -> bool:
        return self.gap < GAP_WARN

    def matrix(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.conj().T

    def pinv_matrix(self) -> np.ndarray:
        return (self.V / self.s) @ self.U.conj().T

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return self.U @ (self.s * (self.V.conj().T @ x))

    def norm(self) -> float:
        return float(self.s[0])

    def pinv_norm(self) -> float:
        return float(1.0 / self.s[-1])


def rank_r_project(A, r: int) -> RankRProjection:
    A = as_matrix(A)
    p = min(A.shape)
    if not 1 <= r <= p:
        raise ValueError(f"projection rank {r} outside [1, {p}]")
    f = svd(A)
    if not f.s[r - 1] > 0:
        raise RankDeficiencyError(
            f"rank-{r} projection requested but sigma_{r} = 0", rank=r, sigma=f.s)
    if r == p or f.s[r] == 0:
        gap = np.inf
    else:
        gap = float(f.s[r - 1] / f.s[r])
    return RankRProjection(r=r, U=f.U[:, :r], s=f.s[:r].copy(),
                           V=f.Vh[:r].conj().T, sigma=f.s, gap=gap)


def pinv_apply(P: RankRProjection, w) -> np.ndarray:
    """Return ``V_r diag(1/s_r) U_r^H w``."""
    w = np.asarray(w, dtype=complex)
    if w.shape[0] != P.U.shape[0]:
        raise ValueError(f"vector length {w.shape[0]} != rows {P.U.shape[0]}")
    return P.V @ ((P.U.conj().T @ w) / (P.s if w.ndim == 1 else P.s[:, None]))


def numerical_rank(A, theta: float) -> int:
    """Largest r with sigma_r > theta (absolute threshold)."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    s = svd(A).s
    return int(np.count_nonzero(s > theta))


def subspace_distance(B1, B2) -> float:
    """Spectral distance ``||B1 B1^H - B2 B2^H||_2`` between column spaces."""
    B1 = np.asarray(B1, dtype=complex)
    B2 = np.asarray(B2, dtype=complex)
    if B1.ndim == 1:
        B1 = B1[:, None]
    if B2.ndim == 1:
        B2 = B2[:, None]
    if B1.shape != B2.shape:
        raise ValueError(f"subspace dimensions differ: {B1.shape} vs {B2.shape}")
    if B1.shape[1] == 0:
        return 0.0
    # For equal dimensions this equals the sine of the largest principal angle.
    D = B1 @ B1.conj().T - B2 @ B2.conj().T
    return float(np.linalg.norm(D, 2))


def thin_qr(A, tol: float = 1e-13):
    """Thin QR ``A = Q R`` with ``Q`` (m, k) orthonormal and ``R`` (k, k).

    Raises :class:`QRRankError` naming the first column whose diagonal
    entry in ``R`` falls below ``tol * ||A||_F``.
    """
    A = as_matrix(A)
    m, k = A.shape
    if k > m:
        raise QRRankError(f"{k} columns cannot be independent in C^{m}", column=m)
    Q, R = np.linalg.qr(A, mode="reduced")
    scale = np.linalg.norm(A)
    d = np.abs(np.diag(R))
    bad = np.nonzero(d <= tol * max(scale, np.finfo(float).tiny))[0]
    if bad.size:
        j = int(bad[0])
        raise QRRankError(f"column {j} is (numerically) dependent on earlier columns", column=j)
    return Q, R


def null_space(A, r: int) -> np.ndarray:
    """Orthonormal basis of the kernel of the rank-r projection of ``A``."""
    A = as_matrix(A)
    Vh = svd(A, full_matrices=True).Vh
    return Vh[r:].conj().T


# ---------------------------------------------------------------- text format

_ENTRY = re.compile(
    r"""^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?
        ([+-](\d+\.?\d*|\.\d+)([eE][+-]?\d+)?i)?$
      |^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?i$""",
    re.VERBOSE,
)


def parse_scalar(tok: str) -> complex:
    """Parse ``a``, ``a+bi``, ``a-bi`` or ``bi``."""
    t = tok.strip()
    if not _ENTRY.match(t):
        raise ValueError(f"bad complex literal {tok!r}")
    return complex(t.replace("i", "j"))


def parse_vector(text: str) -> np.ndarray:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ValueError("empty vector")
    return np.array([parse_scalar(p) for p in parts], dtype=complex)


def parse_matrix(text: str) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([parse_scalar(t) for t in line.split()])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not rows:
        raise ValueError("no matrix rows")
    if len({len(r) for r in rows}) != 1:
        raise ValueError("ragged matrix rows")
    return as_matrix(rows)


def format_complex(z) -> str:
    z = complex(z)
    return "%.15g%+.15gi" % (z.real, z.imag)


def format_matrix(A) -> str:
    A = as_matrix(A)
    return "\n".join(" ".join(format_complex(v) for v in row) for row in A) + "\n"
