"""Mappings between structured spaces and their flat coordinate views.

A :class:`Layout` is an ordered product of components (scalars, vectors,
matrices, polynomial coefficient spaces). ``embed`` sends a structured point
to a complex vector and ``extract`` goes back; both are isometric, with the
product norm being the root-sum-of-squares of the component norms.

A :class:`MappingHandle` pairs an evaluation function with an optional
Jacobian.  Jacobians may be given as matrices (``jac``), as a linear action
on structured directions (``jac_action``), or omitted, in which case central
differences are used.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np


class LayoutError(ValueError):
    pass


class Scalar:
    kind = "scalar"
    size = 1

    def embed(self, v):
        v = np.asarray(v, dtype=complex)
        if v.size != 1:
            raise LayoutError(f"scalar component got shape {v.shape}")
        return v.reshape(1)

    def extract(self, z):
        return complex(z[0])

    def __repr__(self):
        return "Scalar()"

    def __eq__(self, other):
        return isinstance(other, Scalar)


class Vector:
    kind = "coordinate-block"

    def __init__(self, n: int):
        self.n = int(n)
        self.size = self.n

    def embed(self, v):
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.n,):
            raise LayoutError(f"vector component expects ({self.n},), got {v.shape}")
        return v

    def extract(self, z):
        return np.array(z, dtype=complex)

    def __repr__(self):
        return f"Vector({self.n})"

    def __eq__(self, other):
        return isinstance(other, Vector) and other.n == self.n


class Matrix:
    """m-by-n matrix block, entries taken in row-major order."""

    kind = "matrix-block"

    def __init__(self, m: int, n: int):
        self.m, self.n = int(m), int(n)
        self.size = self.m * self.n

    def embed(self, v):
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.m, self.n):
            raise LayoutError(f"matrix component expects {(self.m, self.n)}, got {v.shape}")
        return v.reshape(-1)

    def extract(self, z):
        return np.array(z, dtype=complex).reshape(self.m, self.n)

    def __repr__(self):
        return f"Matrix({self.m}, {self.n})"

    def __eq__(self, other):
        return isinstance(other, Matrix) and (other.m, other.n) == (self.m, self.n)


class PolySpace:
    """Coefficient space spanned by a fixed list of monomials."""

    kind = "polynomial-space"

    def __init__(self, support: Sequence[tuple], variables: Sequence[str]):
        self.support = [tuple(int(e) for e in t) for t in support]
        self.variables = tuple(variables)
        if len(set(self.support)) != len(self.support):
            raise LayoutError("monomial support has repeated exponents")
        for t in self.support:
            if len(t) != len(self.variables) or min(t, default=0) < 0:
                raise LayoutError(f"bad exponent tuple {t} for variables {self.variables}")
        self.index = {t: i for i, t in enumerate(self.support)}
        self.size = len(self.support)

    def embed(self, p):
        p = p.with_variables(self.variables)
        z = np.zeros(self.size, dtype=complex)
        for e, c in p.terms.items():
            try:
                z[self.index[e]] = c
            except KeyError:
                raise LayoutError(f"term with exponents {e} lies outside the support") from None
        return z

    def extract(self, z):
        from .poly import SparsePoly

        return SparsePoly(self.variables, {t: complex(c) for t, c in zip(self.support, z)})

    def __repr__(self):
        return f"PolySpace({len(self.support)} monomials in {self.variables})"

    def __eq__(self, other):
        return (isinstance(other, PolySpace) and other.support == self.support
                and other.variables == self.variables)


class Layout:
    """Ordered product of components; the only basis used for Jacobians."""

    def __init__(self, *components):
        if len(components) == 1 and isinstance(components[0], (list, tuple)):
            components = tuple(components[0])
        if not components:
            raise LayoutError("layout needs at least one component")
        self.components = tuple(components)
        self.sizes = [c.size for c in self.components]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)
        self.total_dim = int(self.offsets[-1])

    def __len__(self):
        return len(self.components)

    def __repr__(self):
        return "Layout(" + ", ".join(map(repr, self.components)) + ")"

    def __eq__(self, other):
        return isinstance(other, Layout) and self.components == other.components

    def embed(self, v) -> np.ndarray:
        if len(self.components) == 1:
            v = (v,)
        if len(v) != len(self.components):
            raise LayoutError(f"expected {len(self.components)} components, got {len(v)}")
        return np.concatenate([c.embed(x) for c, x in zip(self.components, v)])

    def extract(self, z):
        z = np.asarray(z, dtype=complex)
        if z.shape != (self.total_dim,):
            raise LayoutError(f"coordinate vector must have length {self.total_dim}")
        parts = tuple(c.extract(z[a:b]) for c, a, b in
                      zip(self.components, self.offsets[:-1], self.offsets[1:]))
        return parts[0] if len(parts) == 1 else parts

    def norm(self, v) -> float:
        return float(np.linalg.norm(self.embed(v)))


def embed(layout: Layout, v) -> np.ndarray:
    return layout.embed(v)


def extract(layout: Layout, z):
    return layout.extract(z)


def vector_layout(n: int) -> Layout:
    return Layout(Vector(n))


@dataclass
class MappingHandle:
    """A holomorphic mapping ``domain -> codomain``.

    ``eval`` takes and returns structured values.  ``jac(x)`` returns the
    Jacobian matrix at ``x`` (codomain dim by domain dim); alternatively
    ``jac_action(x, dx)`` returns the Jacobian applied to a structured
    direction ``dx``.
    """

    domain: Layout
    codomain: Layout
    eval: Callable[[Any], Any]
    jac: Optional[Callable[[Any], np.ndarray]] = None
    jac_action: Optional[Callable[[Any, Any], Any]] = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def F(self, z) -> np.ndarray:
        """Evaluate in coordinates."""
        return self.codomain.embed(self.eval(self.domain.extract(z)))

    def J(self, z) -> np.ndarray:
        """Jacobian matrix in coordinates."""
        z = np.asarray(z, dtype=complex)
        x = self.domain.extract(z)
        if self.jac is not None:
            Jm = np.asarray(self.jac(x), dtype=complex)
        elif self.jac_action is not None:
            n = self.domain.total_dim
            Jm = np.empty((self.codomain.total_dim, n), dtype=complex)
            for j in range(n):
                e = np.zeros(n, dtype=complex)
                e[j] = 1.0
                Jm[:, j] = self.codomain.embed(self.jac_action(x, self.domain.extract(e)))
        else:
            Jm = fd_jacobian(self.F, z)
        expected = (self.codomain.total_dim, self.domain.total_dim)
        if Jm.shape != expected:
            raise LayoutError(f"Jacobian has shape {Jm.shape}, layouts require {expected}")
        return Jm


def fd_step(z) -> float:
    return 1e-6 * max(1.0, float(np.linalg.norm(z)))


def fd_jacobian(F: Callable, z, h: Optional[float] = None) -> np.ndarray:
    """Central-difference Jacobian of a coordinate function ``F`` at ``z``.

    Real-direction steps suffice because ``F`` is assumed holomorphic.
    """
    z = np.asarray(z, dtype=complex)
    h = fd_step(z) if h is None else h
    cols = []
    for j in range(z.size):
        e = np.zeros_like(z)
        e[j] = h
        cols.append((np.asarray(F(z + e)) - np.asarray(F(z - e))) / (2 * h))
    return np.column_stack(cols)


def coordinate_mapping(F, n: int, m: int, J=None, name="") -> MappingHandle:
    """Wrap plain coordinate functions ``F: C^n -> C^m`` (and optional ``J``)."""
    return MappingHandle(Layout(Vector(n)), Layout(Vector(m)),
                         eval=lambda x: np.asarray(F(x), dtype=complex).reshape(m),
                         jac=J, name=name)


@dataclass
class JacobianCheck:
    deviation: float
    column: int
    flagged: bool


def fd_jacobian_check(f: MappingHandle, x0, h: float = 1e-6, flag_at: float = 1e-6) -> JacobianCheck:
    """Compare ``f``'s Jacobian against central differences of ``f.eval``.

    The deviation of column j is ``||J_j - D_j|| / max(||D_j||, ||J_j||)``
    where ``D`` is the difference quotient (absolute when both vanish); the
    worst column is reported and flagged above ``flag_at``.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    z0 = f.domain.embed(x0)
    J = f.J(z0)
    D = fd_jacobian(f.F, z0, h)
    num = np.linalg.norm(J - D, axis=0)
    den = np.maximum(np.linalg.norm(D, axis=0), np.linalg.norm(J, axis=0))
    rel = np.where(den > 0, num / np.where(den > 0, den, 1.0), num)
    j = int(np.argmax(rel))
    dev = float(rel[j])
    return JacobianCheck(deviation=dev, column=j, flagged=dev > flag_at)
