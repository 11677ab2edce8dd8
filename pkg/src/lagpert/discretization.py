"""Finite-difference boundary triplet for ``-d^2/dx^2 + V`` on ``[a, b]``.

Grid ``x_j = a + j h``, ``j = 0..N``, with ``C^n``-valued samples.  The
maximal operator acts on full-grid vectors (all ``N+1`` nodes) and returns
interior values (nodes ``1..N-1``):

    (A* u)_j = -(u_{j+1} - 2 u_j + u_{j-1}) / h^2 + V_j u_j.

Traces use one-sided first differences,

    G0 u = (u_0, u_N),   G1 u = ((u_1 - u_0)/h, (u_{N-1} - u_N)/h),

for which summation by parts telescopes exactly: with
``<u, v> = h sum_{j=1}^{N-1} u_j . conj(v_j)`` the identity

    <A* u, v> - <u, A* v> = <G1 u, G0 v> - <G0 u, G1 v>

holds to rounding for every pair of full-grid vectors.  Vectors are stored
node-major: component ``c`` of node ``j`` sits at index ``j*n + c``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import BadGrid, BadPotential, BoundaryResonance, DimensionMismatch
from .numerics import HermitianCertificate, certify_hermitian, hermitian_eig
from .symplectic import LagrangianPlane, SymplecticSpace, omega

RESONANCE_TOL = 1e-10
ASYMMETRY_WARN = 1e-12


def parse_complex_array(value) -> np.ndarray:
    """Nested lists of numbers or strings such as ``"1-2j"`` -> complex array."""
    def conv(x):
        if isinstance(x, (list, tuple)):
            return [conv(y) for y in x]
        if isinstance(x, str):
            return complex(x.replace(" ", ""))
        return complex(x)

    if isinstance(value, np.ndarray):
        return value.astype(complex)
    return np.array(conv(value), dtype=complex)


def sample_potential(spec, x: np.ndarray, n: int) -> np.ndarray:
    """Evaluate a potential description at the nodes ``x``.

    ``spec`` is ``None`` (zero), an ``n x n`` matrix (constant), an array of
    shape ``(len(x), n, n)`` (node samples), or a dict
    ``{"kind": "constant" | "polynomial" | "samples", "value": ...}`` where a
    polynomial lists, per entry, coefficients in ascending powers of ``x``.
    """
    m = len(x)
    if spec is None:
        return np.zeros((m, n, n), dtype=complex)
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if "value" not in spec:
            raise BadPotential("potential spec needs a 'value'")
        try:
            value = parse_complex_array(spec["value"])
        except (TypeError, ValueError) as exc:
            raise BadPotential(f"cannot parse potential values: {exc}") from exc
        if kind == "constant":
            if value.ndim == 0 and n == 1:
                value = value.reshape(1, 1)
            if value.shape != (n, n):
                raise BadPotential(f"constant potential must be {n}x{n}, got {value.shape}")
            return np.broadcast_to(value, (m, n, n)).copy()
        if kind == "polynomial":
            if value.ndim != 3 or value.shape[:2] != (n, n):
                raise BadPotential(f"polynomial potential must be {n}x{n}xK coefficients, got {value.shape}")
            powers = x[:, None] ** np.arange(value.shape[2])[None, :]
            return np.einsum("jk,abk->jab", powers, value)
        if kind == "samples":
            if value.shape != (m, n, n):
                raise BadPotential(f"sampled potential must have shape {(m, n, n)}, got {value.shape}")
            return value.copy()
        raise BadPotential(f"unknown potential kind {kind!r}")
    value = np.asarray(spec, dtype=complex)
    if value.shape == (n, n):
        return np.broadcast_to(value, (m, n, n)).copy()
    if value.shape == (m, n, n):
        return value.copy()
    if value.ndim == 0 and n == 1:
        return np.full((m, 1, 1), complex(value))
    raise BadPotential(f"cannot interpret potential of shape {value.shape}")


def _symmetrize(V: np.ndarray) -> np.ndarray:
    asym = np.abs(V - V.conj().transpose(0, 2, 1)).max(initial=0.0)
    if asym > ASYMMETRY_WARN:
        warnings.warn(f"potential samples not Hermitian (defect {asym:.2e}); symmetrizing", stacklevel=3)
    return 0.5 * (V + V.conj().transpose(0, 2, 1))


@dataclass(frozen=True, eq=False)
class DiscreteTriplet:
    a: float
    b: float
    n: int
    N: int
    V: np.ndarray  # (N+1, n, n) Hermitian node samples
    Astar: np.ndarray  # (N-1)n x (N+1)n
    T: np.ndarray  # 4n x (N+1)n

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def weight(self) -> float:
        return self.h

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.N + 1)

    @property
    def d(self) -> int:
        return 2 * self.n

    @cached_property
    def space(self) -> SymplecticSpace:
        return SymplecticSpace(2 * self.n)

    @property
    def interior_dim(self) -> int:
        return (self.N - 1) * self.n

    @property
    def full_dim(self) -> int:
        return (self.N + 1) * self.n

    def restrict(self, u: np.ndarray) -> np.ndarray:
        """Interior values of a full-grid vector (or the rows of a matrix)."""
        return np.asarray(u)[self.n:self.N * self.n]

    def inner(self, u, v) -> complex:
        """``<u, v>_H = h sum u_j conj(v_j)`` over interior vectors."""
        return complex(self.h * np.vdot(v, u))

    def potential_operator(self, samples: np.ndarray) -> np.ndarray:
        """Block-diagonal multiplication operator on interior vectors."""
        return scipy.linalg.block_diag(*samples[1:self.N]).astype(complex)

    def shifted(self, extra: np.ndarray) -> "DiscreteTriplet":
        """The same triplet with node samples ``extra`` added to the potential."""
        return _assemble(self.a, self.b, self.n, self.N, self.V + extra)


def _assemble(a: float, b: float, n: int, N: int, V: np.ndarray) -> DiscreteTriplet:
    h = (b - a) / N
    I = np.eye(n)
    Astar = np.zeros(((N - 1) * n, (N + 1) * n), dtype=complex)
    for j in range(1, N):
        r = (j - 1) * n
        Astar[r:r + n, (j - 1) * n:j * n] = -I / h**2
        Astar[r:r + n, j * n:(j + 1) * n] = 2 * I / h**2 + V[j]
        Astar[r:r + n, (j + 1) * n:(j + 2) * n] = -I / h**2
    T = np.zeros((4 * n, (N + 1) * n), dtype=complex)
    T[0:n, 0:n] = I
    T[n:2 * n, N * n:] = I
    T[2 * n:3 * n, 0:n] = -I / h
    T[2 * n:3 * n, n:2 * n] = I / h
    T[3 * n:, N * n:] = -I / h
    T[3 * n:, (N - 1) * n:N * n] = I / h
    return DiscreteTriplet(float(a), float(b), n, N, V, Astar, T)


def build_triplet(a: float, b: float, n: int, N: int, potential=None) -> DiscreteTriplet:
    if not b > a:
        raise BadGrid(f"need a < b, got [{a}, {b}]")
    if N < 4:
        raise BadGrid(f"need at least 4 subintervals, got N={N}")
    if n < 1:
        raise BadGrid(f"matrix dimension must be positive, got n={n}")
    x = np.linspace(a, b, N + 1)
    V = _symmetrize(sample_potential(potential, x, n))
    return _assemble(a, b, n, N, V)


def green_defect(triplet: DiscreteTriplet, u, v) -> complex:
    """``<A*u, v> - <u, A*v> - omega(Tu, Tv)`` for full-grid vectors."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != (triplet.full_dim,) or v.shape != (triplet.full_dim,):
        raise DimensionMismatch(f"expected full-grid vectors of length {triplet.full_dim}")
    lhs = triplet.inner(triplet.Astar @ u, triplet.restrict(v)) - triplet.inner(triplet.restrict(u), triplet.Astar @ v)
    return lhs - omega(triplet.space, triplet.T @ u, triplet.T @ v)


def _boundary_selector(triplet: DiscreteTriplet) -> np.ndarray:
    """``2n x (N-1)n`` map picking the interior neighbours ``(u_1, u_{N-1})``."""
    n, N = triplet.n, triplet.N
    Sel = np.zeros((2 * n, (N - 1) * n))
    Sel[:n, :n] = np.eye(n)
    Sel[n:, (N - 2) * n:] = np.eye(n)
    return Sel


def ghost_extension(triplet: DiscreteTriplet, plane: LagrangianPlane) -> np.ndarray:
    """Lift interior values to full-grid vectors satisfying ``X G0 u + Y G1 u = 0``.

    The two boundary nodes solve ``(X - Y/h) (u_0, u_N) = -(Y/h) (u_1, u_{N-1})``.
    """
    if not plane.has_blocks:
        raise ValueError("ghost elimination needs the (X, Y) block representation")
    if plane.space.d != triplet.d:
        raise DimensionMismatch("plane and triplet have different boundary dimensions")
    n, N, h = triplet.n, triplet.N, triplet.h
    X, Y = plane.X, plane.Y
    K = X - Y / h
    s = np.linalg.svd(K, compute_uv=False)
    if s[-1] <= RESONANCE_TOL * np.linalg.norm(np.hstack([X, Y]), 2):
        raise BoundaryResonance(f"X - Y/h is singular at h={h:.6g} (sigma_min={s[-1]:.3e})")
    G = np.linalg.solve(K, -Y / h) @ _boundary_selector(triplet)
    E = np.zeros((triplet.full_dim, triplet.interior_dim), dtype=complex)
    E[n:N * n] = np.eye(triplet.interior_dim)
    E[:n] = G[:n]
    E[N * n:] = G[n:]
    return E


@dataclass(frozen=True, eq=False)
class ExtensionOperator:
    """Self-adjoint extension of the minimal operator for one Lagrangian plane."""

    triplet: DiscreteTriplet
    plane: LagrangianPlane
    A: HermitianCertificate
    E: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.A.matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def TE(self) -> np.ndarray:
        """Trace of the domain lift, ``T E : H -> h x h``."""
        return self.triplet.T @ self.E

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and H-orthonormal eigenvectors (columns)."""
        w, V = hermitian_eig(self.A)
        return w, V / np.sqrt(self.triplet.h)

    @property
    def scale(self) -> float:
        w = self.spectrum[0]
        return max(1.0, float(np.abs(w).max()))


def assemble_operator(triplet: DiscreteTriplet, plane: LagrangianPlane) -> ExtensionOperator:
    E = ghost_extension(triplet, plane)
    M = triplet.Astar @ E
    cert = certify_hermitian(M)
    cert = HermitianCertificate(0.5 * (M + M.conj().T), cert.defect)
    return ExtensionOperator(triplet, plane, cert, E)
