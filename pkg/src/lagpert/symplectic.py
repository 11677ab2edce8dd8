"""Boundary symplectic space and Lagrangian planes.

Boundary data live in ``h x h`` with ``h = C^d``; a vector is stored as the
stacked ``2d`` array ``(f1, f2)``.  The symplectic form is

    omega(f, g) = <f2, g1> - <f1, g2> = <J f, g>,   J = [[0, I], [-I, 0]].

A Lagrangian plane is kept both as the kernel of a block row ``Z = [X, Y]``
(when known) and as the orthogonal projection ``Q`` onto it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateCondition, DimensionMismatch, NotSelfAdjointCondition
from .numerics import as_matrix

RANK_TOL = 1e-10
LAGRANGIAN_TOL = 1e-10
CONDITION_TOL = 1e-10


@dataclass(frozen=True)
class SymplecticSpace:
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("boundary dimension must be positive")

    @cached_property
    def J(self) -> np.ndarray:
        d = self.d
        J = np.zeros((2 * d, 2 * d), dtype=complex)
        J[:d, d:] = np.eye(d)
        J[d:, :d] = -np.eye(d)
        return J


def omega(space: SymplecticSpace, f, g) -> complex:
    """``omega(f, g) = <J f, g>``, linear in ``f`` and conjugate-linear in ``g``."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if f.shape != (2 * space.d,) or g.shape != (2 * space.d,):
        raise DimensionMismatch(f"expected vectors of length {2 * space.d}, got {f.shape} and {g.shape}")
    d = space.d
    return complex(np.vdot(g[:d], f[d:]) - np.vdot(g[d:], f[:d]))


def _rank(M: np.ndarray) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s >= RANK_TOL * s[0]))


def _validate_blocks(X: np.ndarray, Y: np.ndarray) -> None:
    Z = np.hstack([X, Y])
    scale = max(1.0, np.linalg.norm(Z) ** 2)
    sym = np.linalg.norm(X @ Y.conj().T - Y @ X.conj().T)
    if sym > CONDITION_TOL * scale:
        raise NotSelfAdjointCondition(f"||XY* - YX*|| = {sym:.3e} exceeds {CONDITION_TOL:.0e} * scale")
    s = np.linalg.eigvalsh(Z @ Z.conj().T)
    if s[-1] <= 0 or s[0] <= CONDITION_TOL * s[-1]:
        raise DegenerateCondition(f"XX* + YY* is singular (smallest eigenvalue {s[0]:.3e})")


def projection_of_plane(X, Y) -> np.ndarray:
    """Orthogonal projection onto ``ker [X, Y]``: ``Q = -J Z^* (Z Z^*)^{-1} Z J``."""
    X = as_matrix(X, square=True)
    Y = as_matrix(Y, square=True)
    if X.shape != Y.shape:
        raise DimensionMismatch("X and Y must have the same shape")
    _validate_blocks(X, Y)
    J = SymplecticSpace(X.shape[0]).J
    Z = np.hstack([X, Y])
    Q = -J @ Z.conj().T @ np.linalg.solve(Z @ Z.conj().T, Z @ J)
    return 0.5 * (Q + Q.conj().T)


@dataclass(frozen=True)
class LagrangianReport:
    is_lagrangian: bool
    hermitian_defect: float
    idempotent_defect: float
    isotropy_defect: float
    rank: int

    def __bool__(self) -> bool:
        return self.is_lagrangian


def is_lagrangian(space: SymplecticSpace, Q, tol: float = LAGRANGIAN_TOL) -> LagrangianReport:
    """Check ``Q = Q^* = Q^2``, ``rank Q = d`` and ``Q J Q = 0``."""
    Q = as_matrix(Q, square=True)
    if Q.shape[0] != 2 * space.d:
        raise DimensionMismatch(f"expected a {2 * space.d}-square matrix, got {Q.shape}")
    herm = float(np.linalg.norm(Q - Q.conj().T))
    idem = float(np.linalg.norm(Q @ Q - Q))
    iso = float(np.linalg.norm(Q @ space.J @ Q))
    rank = _rank(Q)
    ok = herm <= tol and idem <= tol and iso <= tol and rank == space.d
    return LagrangianReport(ok, herm, idem, iso, rank)


@dataclass(frozen=True)
class LagrangianPlane:
    space: SymplecticSpace
    Q: np.ndarray
    X: np.ndarray | None = field(default=None)
    Y: np.ndarray | None = field(default=None)

    @property
    def has_blocks(self) -> bool:
        return self.X is not None and self.Y is not None

    @property
    def Z(self) -> np.ndarray:
        if not self.has_blocks:
            raise AttributeError("plane was built without a block representation")
        return np.hstack([self.X, self.Y])

    def basis(self) -> np.ndarray:
        """Orthonormal basis of ``ran Q`` as the columns of a ``2d x d`` array."""
        w, V = np.linalg.eigh(self.Q)
        return V[:, w > 0.5]


def make_plane_from_Z(space: SymplecticSpace, X, Y) -> LagrangianPlane:
    X = as_matrix(X, square=True)
    Y = as_matrix(Y, square=True)
    if X.shape != (space.d, space.d) or Y.shape != (space.d, space.d):
        raise DimensionMismatch(f"X, Y must be {space.d}x{space.d}")
    return LagrangianPlane(space, projection_of_plane(X, Y), X, Y)


def plane_from_projection(space: SymplecticSpace, Q) -> LagrangianPlane:
    report = is_lagrangian(space, Q)
    if not report:
        raise ValueError(f"not a Lagrangian projection: {report}")
    return LagrangianPlane(space, as_matrix(Q))


def plane_distance(F1: LagrangianPlane, F2: LagrangianPlane) -> float:
    """Operator-norm distance ``||Q1 - Q2||`` between two planes."""
    if F1.space.d != F2.space.d:
        raise DimensionMismatch("planes live in different spaces")
    return float(np.linalg.norm(F1.Q - F2.Q, 2))
