"""Spectral objects of one extension at a fixed parameter.

Besides the resolvent, the isolated eigenvalue cluster (projection ``P`` and
reduced resolvent ``S``) this module provides the *boundary compressions*
that stand in for ``T (T M)^*`` in the expansion formulas.

Lifting rule.  ``(T E M)^*`` returns interior values only; applying ``T``
needs a full-grid representative.  The domain lift ``E`` is right for the
operators ``P`` and ``S^2``, but the representative produced by
differentiating ``t -> E_t R_t`` is the *harmonic* lift, which differs from
``E`` on the two boundary nodes by ``h^2`` times the (boundary-supported)
source ``(T E)^* x``.  That difference is a constant boundary operator ``C``
(:func:`trace_lift_correction`).  Expanding the resolvent in its Laurent
series at ``lambda`` shows that ``C`` travels with the order-zero
coefficient, so

    T (T S)^*  ->  T E S (T E)^* + C,       T (T R(z))^* -> T E R(z) (T E)^* + C,
    T (T P)^*  ->  T E P (T E)^*,           T (T S^2)^*  -> T E S^2 (T E)^*.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .discretization import ExtensionOperator, _boundary_selector
from .errors import NotIsolated, SpectralPointHit
from .numerics import solve, weighted_adjoint


def trace_adjoint(ext: ExtensionOperator) -> np.ndarray:
    """``(T E)^*`` from Euclidean ``h x h`` into the weighted interior space."""
    return weighted_adjoint(ext.TE, ext.triplet.h, 1.0)


def resolvent(ext: ExtensionOperator, zeta: complex) -> np.ndarray:
    """``(A - zeta)^{-1}`` by pivoted LU."""
    w = ext.spectrum[0]
    gap = np.abs(w - zeta).min()
    if gap <= 1e-10 * ext.scale:
        raise SpectralPointHit(f"zeta={zeta} is within {gap:.3e} of the spectrum")
    M = ext.matrix - zeta * np.eye(ext.dim)
    return solve(M, np.eye(ext.dim, dtype=complex))


def resolvent_spectral(ext: ExtensionOperator, zeta: complex) -> np.ndarray:
    """The same resolvent from the eigendecomposition, ``V diag(1/(l-z)) V^*``."""
    w, U = ext.spectrum
    h = ext.triplet.h
    return (U / (w - zeta)) @ (h * U.conj().T)


@dataclass(frozen=True, eq=False)
class LambdaGroup:
    """An isolated eigenvalue cluster of an extension."""

    ext: ExtensionOperator
    lam: float
    indices: tuple[int, ...]
    radius: float
    width: float
    U: np.ndarray  # H-orthonormal eigenvectors of the cluster (columns)

    @property
    def m(self) -> int:
        return len(self.indices)

    @cached_property
    def P(self) -> np.ndarray:
        return self.U @ (self.ext.triplet.h * self.U.conj().T)

    @cached_property
    def S(self) -> np.ndarray:
        w, U = self.ext.spectrum
        rest = np.setdiff1d(np.arange(len(w)), self.indices)
        Ur = U[:, rest]
        return (Ur / (w[rest] - self.lam)) @ (self.ext.triplet.h * Ur.conj().T)

    @cached_property
    def S2(self) -> np.ndarray:
        return self.S @ self.S

    @cached_property
    def lifted_S(self) -> np.ndarray:
        """Boundary operator standing in for ``T (T S)^*``."""
        return boundary_compression(self.ext, self.S) + trace_lift_correction(self.ext)


def lambda_group(ext: ExtensionOperator, target: float, cluster_tol: float = 1e-8) -> LambdaGroup:
    """Cluster of eigenvalues within ``cluster_tol * scale`` of the one nearest ``target``."""
    w, U = ext.spectrum
    scale = ext.scale
    k0 = int(np.argmin(np.abs(w - target)))
    members = np.flatnonzero(np.abs(w - w[k0]) <= cluster_tol * scale)
    lam = float(w[members].mean())
    rest = np.setdiff1d(np.arange(len(w)), members)
    radius = float(np.abs(w[rest] - lam).min() / 2) if rest.size else np.inf
    if radius <= 10 * cluster_tol * scale:
        raise NotIsolated(f"eigenvalue cluster at {lam:.6g} has separation radius {radius:.3e}")
    width = float(w[members].max() - w[members].min())
    return LambdaGroup(ext, lam, tuple(int(i) for i in members), radius, width, U[:, members])


def boundary_compression(ext: ExtensionOperator, M: np.ndarray) -> np.ndarray:
    """``(T E) M (T E)^*``: the ``4n x 4n`` compression of an H-operator."""
    return ext.TE @ M @ trace_adjoint(ext)


def trace_lift_correction(ext: ExtensionOperator) -> np.ndarray:
    """Boundary operator ``C`` separating the harmonic lift from ``E``.

    ``C x = T delta`` where ``delta`` vanishes at interior nodes and equals
    ``h^2 ((T E)^* x)`` at the boundary nodes (the source of ``(T E)^* x`` is
    supported on the two interior neighbours of the boundary).
    """
    tr = ext.triplet
    n, N, h = tr.n, tr.N, tr.h
    T_bnd = np.hstack([tr.T[:, :n], tr.T[:, N * n:]])
    return h**2 * T_bnd @ _boundary_selector(tr) @ trace_adjoint(ext)


def lifted_compression(ext: ExtensionOperator, M: np.ndarray, *, harmonic: bool) -> np.ndarray:
    """``T (T M)^*`` realised with the lifting rule described in the module docstring."""
    B = boundary_compression(ext, M)
    return B + trace_lift_correction(ext) if harmonic else B
