"""Second-order perturbation theory for one-parameter boundary families.

A :class:`BoundaryFamily` describes Lagrangian planes ``ker [X(t), Y(t)]``
(optionally together with an additive potential ``V(t)``).  Around ``t0``
this module computes

* ``Q, Q', Q''`` of the projection family,
* the Krein resolvent difference and the resolvent derivatives,
* the derivatives of the spectral projection of an eigenvalue cluster,
* the first two derivatives of the compressed operator ``W_t`` on the
  cluster space, and a direct evaluator of ``W_t`` for checking them,
* Kato selection of the bifurcating branches and three formula routes for
  their Taylor coefficients (symplectic/Z-form, Robin, additive).

Taylor coefficients are stored normalised as ``lambda(t) ~ lambda + c1 dt +
c2 dt^2``; the curvature ``nu`` of a branch is therefore ``2 * c2``.

Whenever a formula applies ``T`` to an adjoint ``(T M)^*`` the boundary
operator is taken from :mod:`lagpert.spectral` (``lifted_S`` for ``M = S``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np

from .discretization import DiscreteTriplet, ExtensionOperator, _boundary_selector, assemble_operator, parse_complex_array, sample_potential
from .errors import FormulaMismatch, NotIsolated, NotRobin, NotSelfAdjointCondition, UnitaryBreakdown
from .numerics import certify_hermitian, weighted_adjoint
from .spectral import LambdaGroup, boundary_compression, lifted_compression, resolvent
from .symplectic import LagrangianPlane, SymplecticSpace, make_plane_from_Z, omega

MISMATCH_TOL = 1e-8


def _poly(coeffs, t: float, order: int = 0) -> np.ndarray:
    out = np.zeros_like(coeffs[0], dtype=complex)
    for k in range(order, len(coeffs)):
        out = out + (factorial(k) / factorial(k - order)) * t ** (k - order) * coeffs[k]
    return out


def _coeff_list(coeffs, d: int | None = None) -> tuple[np.ndarray, ...]:
    arrs = tuple(parse_complex_array(c) for c in coeffs)
    if not arrs:
        raise ValueError("empty coefficient list")
    shape = arrs[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(a.shape != shape for a in arrs):
        raise ValueError("coefficients must be square matrices of one common size")
    if d is not None and shape[0] != d:
        raise ValueError(f"coefficients must be {d}x{d}")
    return arrs


@dataclass(frozen=True, eq=False)
class BoundaryFamily:
    """``Z(t) = [X(t), Y(t)]`` with polynomial blocks in powers of ``t``.

    ``kind`` is ``"robin"`` when ``X = Theta(t)``, ``Y = -I`` with Hermitian
    coefficients.  ``additive`` holds potential descriptions ``V_k`` with
    ``V(t) = sum_k t^k V_k(x)``.
    """

    kind: str
    x_coeffs: tuple[np.ndarray, ...]
    y_coeffs: tuple[np.ndarray, ...]
    t0: float = 0.0
    window: tuple[float, float] | None = None
    additive: tuple = ()

    @property
    def d(self) -> int:
        return self.x_coeffs[0].shape[0]

    @property
    def is_robin(self) -> bool:
        return self.kind == "robin"

    @property
    def has_additive(self) -> bool:
        return len(self.additive) > 0

    @cached_property
    def space(self) -> SymplecticSpace:
        return SymplecticSpace(self.d)

    def blocks(self, t: float, order: int = 0) -> tuple[np.ndarray, np.ndarray]:
        return _poly(self.x_coeffs, t, order), _poly(self.y_coeffs, t, order)

    def Z(self, t: float | None = None, order: int = 0) -> np.ndarray:
        X, Y = self.blocks(self.t0 if t is None else t, order)
        return np.hstack([X, Y])

    def theta(self, t: float | None = None, order: int = 0) -> np.ndarray:
        if not self.is_robin:
            raise NotRobin("family has no Robin representation")
        return _poly(self.x_coeffs, self.t0 if t is None else t, order)

    def plane(self, t: float | None = None) -> LagrangianPlane:
        X, Y = self.blocks(self.t0 if t is None else t)
        return make_plane_from_Z(self.space, X, Y)

    def additive_samples(self, triplet: DiscreteTriplet, t: float | None = None, order: int = 0) -> np.ndarray:
        """Node samples of ``d^order V / dt^order`` at ``t``."""
        t = self.t0 if t is None else t
        out = np.zeros((triplet.N + 1, triplet.n, triplet.n), dtype=complex)
        for k, spec in enumerate(self.additive):
            if k < order:
                continue
            Vk = sample_potential(spec, triplet.x, triplet.n)
            out += (factorial(k) / factorial(k - order)) * t ** (k - order) * Vk
        return 0.5 * (out + out.conj().transpose(0, 2, 1))

    def additive_operator(self, triplet: DiscreteTriplet, order: int, t: float | None = None) -> np.ndarray:
        return triplet.potential_operator(self.additive_samples(triplet, t, order))

    def validate(self, points: int = 9) -> None:
        """Plane validation at ``t0`` and across the declared window."""
        ts = [self.t0]
        if self.window is not None:
            lo, hi = self.window
            if not lo <= self.t0 <= hi:
                raise ValueError(f"t0={self.t0} outside window {self.window}")
            ts += list(np.linspace(lo, hi, points))
        for t in ts:
            self.plane(t)


def robin_family(theta_coeffs, t0: float = 0.0, window=None, additive=()) -> BoundaryFamily:
    """``Gamma_1 u = Theta(t) Gamma_0 u`` with ``Theta(t) = sum_k t^k Theta_k``."""
    th = _coeff_list(theta_coeffs)
    for c in th:
        if np.abs(c - c.conj().T).max() > 1e-12:
            raise NotSelfAdjointCondition("Robin coefficients must be Hermitian")
    d = th[0].shape[0]
    fam = BoundaryFamily("robin", th, (-np.eye(d, dtype=complex),), float(t0),
                         None if window is None else tuple(window), tuple(additive))
    fam.validate()
    return fam


def general_family(x_coeffs, y_coeffs, t0: float = 0.0, window=None, additive=()) -> BoundaryFamily:
    xs = _coeff_list(x_coeffs)
    ys = _coeff_list(y_coeffs, xs[0].shape[0])
    fam = BoundaryFamily("general", xs, ys, float(t0), None if window is None else tuple(window), tuple(additive))
    fam.validate()
    return fam


def sampled_family(ts, Xs, Ys, t0: float, degree: int = 4, additive=()) -> BoundaryFamily:
    """Fit polynomial blocks through samples ``(t, X, Y)``.

    The fit is exact when ``len(ts) == degree + 1``; otherwise least squares.
    The window is the sampled range.
    """
    ts = np.asarray(ts, dtype=float)
    Xs = np.asarray([parse_complex_array(X) for X in Xs])
    Ys = np.asarray([parse_complex_array(Y) for Y in Ys])
    deg = min(degree, len(ts) - 1)
    # Vandermonde in the shifted variable keeps the fit well conditioned
    s = ts - t0
    V = s[:, None] ** np.arange(deg + 1)[None, :]
    d = Xs.shape[1]
    cx = np.linalg.lstsq(V, Xs.reshape(len(ts), -1), rcond=None)[0].reshape(deg + 1, d, d)
    cy = np.linalg.lstsq(V, Ys.reshape(len(ts), -1), rcond=None)[0].reshape(deg + 1, d, d)
    # re-expand sum_k c_k (t - t0)^k in powers of t
    def unshift(c):
        out = np.zeros_like(c)
        for k in range(deg + 1):
            for j in range(k + 1):
                out[j] += c[k] * (factorial(k) / (factorial(j) * factorial(k - j))) * (-t0) ** (k - j)
        return tuple(out)

    fam = BoundaryFamily("general", unshift(cx), unshift(cy), float(t0), (float(ts.min()), float(ts.max())), tuple(additive))
    fam.validate()
    return fam


def finite_difference_blocks(fam: BoundaryFamily, dt: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """``Z'(t0)`` and ``Z''(t0)`` from 5-point central differences with one Richardson step."""
    def d1(step):
        Z = lambda k: fam.Z(fam.t0 + k * step)
        return (Z(-2) - 8 * Z(-1) + 8 * Z(1) - Z(2)) / (12 * step)

    def d2(step):
        Z = lambda k: fam.Z(fam.t0 + k * step)
        return (-Z(-2) + 16 * Z(-1) - 30 * Z(0) + 16 * Z(1) - Z(2)) / (12 * step**2)

    return (16 * d1(dt / 2) - d1(dt)) / 15, (16 * d2(dt / 2) - d2(dt)) / 15


def q_derivatives(fam: BoundaryFamily, t: float | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``Q, Q', Q''`` by the product rule on ``Q = alpha beta gamma``.

    ``alpha = -J Z^*``, ``beta = (Z Z^*)^{-1}``, ``gamma = Z J``.
    """
    t = fam.t0 if t is None else t
    J = fam.space.J
    Z0, Z1, Z2 = (fam.Z(t, k) for k in range(3))
    H = lambda M: M.conj().T
    a0, a1, a2 = (-J @ H(Zk) for Zk in (Z0, Z1, Z2))
    g0, g1, g2 = (Zk @ J for Zk in (Z0, Z1, Z2))
    b0 = np.linalg.inv(Z0 @ H(Z0))
    s1 = Z1 @ H(Z0) + Z0 @ H(Z1)
    s2 = Z2 @ H(Z0) + 2 * Z1 @ H(Z1) + Z0 @ H(Z2)
    b1 = -b0 @ s1 @ b0
    b2 = -b1 @ s1 @ b0 - b0 @ s2 @ b0 - b0 @ s1 @ b1
    Q = a0 @ b0 @ g0
    Qd = a1 @ b0 @ g0 + a0 @ b1 @ g0 + a0 @ b0 @ g1
    Qdd = (a2 @ b0 @ g0 + a0 @ b2 @ g0 + a0 @ b0 @ g2
           + 2 * (a1 @ b1 @ g0 + a1 @ b0 @ g1 + a0 @ b1 @ g1))
    herm = lambda M: 0.5 * (M + H(M))
    return herm(Q), herm(Qd), herm(Qdd)


def operator_at(triplet: DiscreteTriplet, fam: BoundaryFamily, t: float | None = None) -> ExtensionOperator:
    """The extension ``A_t`` (plus ``V(t)`` when the family is additive)."""
    t = fam.t0 if t is None else t
    tr = triplet.shifted(fam.additive_samples(triplet, t)) if fam.has_additive else triplet
    return assemble_operator(tr, fam.plane(t))


def ghost_extension_derivative(triplet: DiscreteTriplet, fam: BoundaryFamily, t: float | None = None) -> np.ndarray:
    """``dE/dt``: only the two boundary-node block rows move with ``t``."""
    t = fam.t0 if t is None else t
    h, n, N = triplet.h, triplet.n, triplet.N
    X, Y = fam.blocks(t)
    Xd, Yd = fam.blocks(t, 1)
    K = X - Y / h
    G = np.linalg.solve(K, -Y / h)
    Gd = np.linalg.solve(K, -Yd / h - (Xd - Yd / h) @ G) @ _boundary_selector(triplet)
    Ed = np.zeros((triplet.full_dim, triplet.interior_dim), dtype=complex)
    Ed[:n] = Gd[:n]
    Ed[N * n:] = Gd[n:]
    return Ed


def _adj(triplet: DiscreteTriplet, M: np.ndarray) -> np.ndarray:
    """Adjoint of a map from the weighted interior space into ``h x h``."""
    return weighted_adjoint(M, triplet.h, 1.0)


# ---------------------------------------------------------------- resolvents

def krein_residual(triplet: DiscreteTriplet, fam: BoundaryFamily, t: float, zeta: complex,
                   simplified: bool = False) -> float:
    """Relative residual of the Krein resolvent formula between ``t0`` and ``t``.

    The left factor is ``(T E_t R_t(conj zeta))^*``; for real ``zeta`` this is
    the usual ``(T R_t(zeta))^*``.  With ``simplified`` the factor
    ``(Q_t - Q_t0) J Q_t0`` is replaced by ``Q_t J``.
    """
    ext0 = operator_at(triplet, fam, fam.t0)
    ext1 = operator_at(triplet, fam, t)
    J = fam.space.J
    R0 = resolvent(ext0, zeta)
    R1 = resolvent(ext1, zeta)
    left = _adj(triplet, ext1.TE @ resolvent(ext1, np.conj(zeta)))
    Q0, Q1 = ext0.plane.Q, ext1.plane.Q
    mid = Q1 @ J if simplified else (Q1 - Q0) @ J @ Q0
    rhs = left @ mid @ ext0.TE @ R0
    if fam.has_additive:
        dV = triplet.potential_operator(fam.additive_samples(triplet, fam.t0) - fam.additive_samples(triplet, t))
        rhs = rhs + R1 @ dV @ R0
    return float(np.linalg.norm(R1 - R0 - rhs, 2) / np.linalg.norm(R0, 2))


def _require_pure_boundary(fam: BoundaryFamily) -> None:
    if fam.has_additive:
        raise ValueError("this formula covers boundary families without an additive part")


def resolvent_derivatives(triplet: DiscreteTriplet, fam: BoundaryFamily, zeta: float) -> tuple[np.ndarray, np.ndarray]:
    """``R'`` and ``R''`` of ``t -> (A_t - zeta)^{-1}`` at ``t0`` for real ``zeta``."""
    _require_pure_boundary(fam)
    zeta = float(np.real(zeta))
    ext = operator_at(triplet, fam)
    _, Qd, Qdd = q_derivatives(fam)
    J = fam.space.J
    R = resolvent(ext, zeta)
    TR = ext.TE @ R
    TRa = _adj(triplet, TR)
    Rd = TRa @ Qd @ J @ TR
    TRd = lifted_compression(ext, R, harmonic=True) @ Qd @ J @ TR
    Rdd = TRa @ Qdd @ J @ TR + 2 * _adj(triplet, TRd) @ Qd @ J @ TR
    return Rd, Rdd


def projection_derivatives(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivative of the cluster projection ``P_t`` at ``t0``."""
    _require_pure_boundary(fam)
    ext = group.ext
    _, Qd, Qdd = q_derivatives(fam)
    J = fam.space.J
    QdJ, QddJ = Qd @ J, Qdd @ J
    TE = ext.TE
    TP, TS, TS2 = TE @ group.P, TE @ group.S, TE @ group.S2
    adj = lambda M: _adj(triplet, M)
    lifted = {
        "S": group.lifted_S,
        "P": boundary_compression(ext, group.P),
        "S2": boundary_compression(ext, group.S2),
    }
    traced = {"S": TS, "P": TP, "S2": TS2}

    def term(a: str, b: str, c: str) -> np.ndarray:
        # (T (T a)^* Q'J T b)^* Q'J T c
        return adj(lifted[a] @ QdJ @ traced[b]) @ QdJ @ traced[c]

    Pd = adj(TS) @ QdJ @ TP + adj(TP) @ QdJ @ TS
    Pdd = (adj(TS) @ QddJ @ TP + adj(TP) @ QddJ @ TS
           + 2 * term("S", "S", "P") + 2 * term("S", "P", "S") + 2 * term("P", "S", "S")
           - 2 * term("S2", "P", "P") - 2 * term("P", "S2", "P") - 2 * term("P", "P", "S2"))
    return Pd, Pdd


# ------------------------------------------------------------- W expansion

@dataclass(frozen=True, eq=False)
class WExpansion:
    """``W_t ~ W0 + W' dt + W'' dt^2 / 2`` as ``m x m`` matrices in the basis ``U``."""

    lam: float
    U: np.ndarray
    W0: np.ndarray
    Wdot: np.ndarray
    Wddot: np.ndarray

    def taylor(self, dt: float) -> np.ndarray:
        return self.W0 + self.Wdot * dt + 0.5 * self.Wddot * dt**2


def w_expansion(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup) -> WExpansion:
    """Coefficients of the compressed operator on ``ran P``.

    Includes the additive contribution when the family carries ``V(t)``
    (``group`` must then belong to ``A_t0 + V(t0)``).
    """
    ext = group.ext
    _, Qd, Qdd = q_derivatives(fam)
    J = fam.space.J
    U = group.U
    TU = ext.TE @ U
    H = lambda M: M.conj().T
    QdJTU = Qd @ J @ TU
    Wd = H(TU) @ J @ Qd @ TU
    Wdd = H(TU) @ J @ Qdd @ TU - 2 * H(group.lifted_S @ QdJTU) @ QdJTU
    if fam.has_additive:
        h = triplet.h
        Ua = h * H(U)
        Vd = fam.additive_operator(triplet, 1)
        Vdd = fam.additive_operator(triplet, 2)
        G = H(QdJTU) @ (ext.TE @ group.S @ Vd @ U)
        Wd = Wd + Ua @ Vd @ U
        Wdd = Wdd + Ua @ Vdd @ U + 2 * (G + H(G)) - 2 * Ua @ Vd @ group.S @ Vd @ U
    m = group.m
    Wd = certify_hermitian(Wd).matrix
    Wdd = certify_hermitian(Wdd).matrix
    return WExpansion(group.lam, U, group.lam * np.eye(m, dtype=complex), 0.5 * (Wd + H(Wd)), 0.5 * (Wdd + H(Wdd)))


def cluster_projection_at(ext: ExtensionOperator, lam: float, radius: float, m: int) -> np.ndarray:
    """Spectral projection of ``ext`` for the eigenvalues inside ``|z - lam| < radius``."""
    w, U = ext.spectrum
    idx = np.flatnonzero(np.abs(w - lam) < radius)
    if len(idx) != m:
        raise NotIsolated(f"{len(idx)} eigenvalues inside the contour, expected {m}")
    Ug = U[:, idx]
    return Ug @ (ext.triplet.h * Ug.conj().T)


def unitary_transport(P0: np.ndarray, Pt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``U_t`` mapping ``ran P0`` onto ``ran Pt`` and its inverse."""
    D = Pt - P0
    D = 0.5 * (D + D.conj().T)
    ev, V = np.linalg.eigh(D)
    if np.abs(ev).max(initial=0.0) >= 1.0:
        raise UnitaryBreakdown(f"||P_t - P_t0|| = {np.abs(ev).max():.3f} >= 1")
    root = (V / np.sqrt(1.0 - ev**2)) @ V.conj().T
    I = np.eye(P0.shape[0])
    Ut = root @ ((I - Pt) @ (I - P0) + Pt @ P0)
    Uinv = ((I - P0) @ (I - Pt) + P0 @ Pt) @ root
    return Ut, Uinv


def direct_w(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup, t: float) -> np.ndarray:
    """``W_t = P0 U_t^{-1} A_t U_t P0`` evaluated directly, as an ``m x m`` matrix."""
    ext_t = operator_at(triplet, fam, t)
    Pt = cluster_projection_at(ext_t, group.lam, group.radius, group.m)
    Ut, Uinv = unitary_transport(group.P, Pt)
    U = group.U
    return (triplet.h * U.conj().T) @ Uinv @ ext_t.matrix @ Ut @ U


# ------------------------------------------------------------ Kato selection

@dataclass(frozen=True)
class KatoBranch:
    i: int
    k: int
    mu: float
    nu: float
    coeffs: np.ndarray  # unit vector in C^m (cluster basis coordinates)


@dataclass(frozen=True)
class KatoSelection:
    branches: list[KatoBranch]
    m_prime: int
    m_prime_i: list[int]


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    groups: list[list[int]] = []
    for j in range(len(values)):
        if groups and values[j] - values[groups[-1][-1]] <= tol:
            groups[-1].append(j)
        else:
            groups.append([j])
    return [np.array(g) for g in groups]


def kato_selection(Wdot, Wddot, cluster_tol_mu: float = 1e-6) -> KatoSelection:
    """Split the cluster by the eigenvalues of ``W'``, then by ``W''`` compressed to each eigenspace."""
    Wd = np.atleast_2d(np.asarray(Wdot, dtype=complex))
    Wdd = np.atleast_2d(np.asarray(Wddot, dtype=complex))
    mus, C = np.linalg.eigh(0.5 * (Wd + Wd.conj().T))
    tol_mu = cluster_tol_mu * max(1.0, np.abs(mus).max(initial=0.0))
    branches: list[KatoBranch] = []
    m_prime_i: list[int] = []
    for i, grp in enumerate(_clusters(mus, tol_mu)):
        Ci = C[:, grp]
        comp = Ci.conj().T @ Wdd @ Ci
        nus, Ck = np.linalg.eigh(0.5 * (comp + comp.conj().T))
        vecs = Ci @ Ck
        mu = float(mus[grp].mean())
        tol_nu = cluster_tol_mu * max(1.0, np.abs(nus).max(initial=0.0))
        m_prime_i.append(len(_clusters(nus, tol_nu)))
        for k in range(len(nus)):
            branches.append(KatoBranch(i, k, mu, float(nus[k]), vecs[:, k]))
    return KatoSelection(branches, len(m_prime_i), m_prime_i)


# ------------------------------------------------------- eigencurve expansion

@dataclass
class Branch:
    i: int
    k: int
    mu: float
    nu: float
    c1: float
    c2: float
    u: np.ndarray
    gamma0: np.ndarray
    phi: np.ndarray | None = None
    routes: dict[str, tuple[float, float]] = field(default_factory=dict)


@dataclass
class ExpansionResult:
    lam: float
    t0: float
    m: int
    m_prime: int
    m_prime_i: list[int]
    branches: list[Branch]
    formula_used: str

    @property
    def scale(self) -> float:
        vals = [1.0, abs(self.lam)] + [abs(b.c1) for b in self.branches] + [abs(b.c2) for b in self.branches]
        return max(vals)

    def coefficients(self) -> np.ndarray:
        """``(m, 2)`` array of ``(c1, c2)`` in branch order."""
        return np.array([[b.c1, b.c2] for b in self.branches])


def _sorted_branches(branches: list[Branch]) -> list[Branch]:
    return sorted(branches, key=lambda b: (b.mu, b.nu))


def _check(route: str, got: tuple[float, float], want: tuple[float, float], scale: float) -> None:
    dev = max(abs(got[0] - want[0]), abs(got[1] - want[1]))
    if dev > MISMATCH_TOL * scale:
        raise FormulaMismatch(f"{route} route deviates by {dev:.3e} (scale {scale:.3g})")


def _kato_branches(triplet, fam, group, cluster_tol_mu):
    wexp = w_expansion(triplet, fam, group)
    sel = kato_selection(wexp.Wdot, wexp.Wddot, cluster_tol_mu)
    return wexp, sel


def _symplectic_coefficients(fam, group, u, Qd, Qdd):
    """``omega(Q' T u, T u)`` and the curvature of the Q-form."""
    J = fam.space.J
    Tu = group.ext.TE @ u
    x = Qd @ J @ Tu
    c1 = omega(fam.space, Qd @ Tu, Tu).real
    nu = omega(fam.space, Qdd @ Tu, Tu).real - 2 * np.vdot(x, group.lifted_S @ x).real
    return c1, nu / 2


def expand_eigencurves_Z(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup,
                         cluster_tol_mu: float = 1e-6) -> ExpansionResult:
    """Branches from Kato selection, cross-checked against the ``Z``-block formulas."""
    _require_pure_boundary(fam)
    _, Qd, Qdd = q_derivatives(fam)
    wexp, sel = _kato_branches(triplet, fam, group, cluster_tol_mu)
    J = fam.space.J
    d = fam.d
    Z, Zd, Zdd = (fam.Z(None, k) for k in range(3))
    H = lambda M: M.conj().T
    ZZ = Z @ H(Z)
    branches = []
    for kb in sel.branches:
        u = wexp.U @ kb.coeffs
        Tu = group.ext.TE @ u
        phi = np.linalg.solve(ZZ, Z @ J @ Tu)
        w = H(Zd) @ phi
        c1z = np.vdot(phi, Z @ J @ H(Zd) @ phi).real
        c2z = 0.5 * (np.vdot(phi, Z @ J @ H(Zdd) @ phi).real - 2 * np.vdot(w, group.lifted_S @ w).real)
        br = Branch(kb.i, kb.k, kb.mu, kb.nu, kb.mu, kb.nu / 2, u, Tu[:d], phi)
        br.routes["kato"] = (kb.mu, kb.nu / 2)
        br.routes["zform"] = (c1z, c2z)
        br.routes["qform"] = _symplectic_coefficients(fam, group, u, Qd, Qdd)
        branches.append(br)
    res = ExpansionResult(group.lam, fam.t0, group.m, sel.m_prime, sel.m_prime_i, _sorted_branches(branches), "Z-form")
    for br in res.branches:
        _check("Z-form", br.routes["zform"], br.routes["kato"], res.scale)
        _check("Q-form", br.routes["qform"], br.routes["kato"], res.scale)
    return res


def expand_eigencurves_robin(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup,
                             cluster_tol_mu: float = 1e-6) -> ExpansionResult:
    """Robin-type route: ``c1 = <Theta' g, g>``, ``c2 = <(Theta'' - 2 Theta' G_S Theta') g, g> / 2``.

    ``g = Gamma_0 u`` and ``G_S`` is the ``Gamma_0`` block of the lifted
    compression of the reduced resolvent.
    """
    if not fam.is_robin:
        raise NotRobin("family has no Robin representation")
    zres = expand_eigencurves_Z(triplet, fam, group, cluster_tol_mu)
    d = fam.d
    Th1, Th2 = fam.theta(None, 1), fam.theta(None, 2)
    GS = group.lifted_S[:d, :d]
    for br in zres.branches:
        g = br.gamma0
        c1 = np.vdot(g, Th1 @ g).real
        c2 = 0.5 * np.vdot(g, (Th2 - 2 * Th1 @ GS @ Th1) @ g).real
        br.routes["robin"] = (c1, c2)
        br.c1, br.c2 = c1, c2
    zres.formula_used = "robin"
    for br in zres.branches:
        _check("Robin", br.routes["robin"], br.routes["zform"], zres.scale)
    return zres


def expand_eigencurves_additive(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup,
                                cluster_tol_mu: float = 1e-6) -> ExpansionResult:
    """Branches of ``H_t = A_t + V(t)``; ``group`` must belong to ``H_t0``."""
    wexp, sel = _kato_branches(triplet, fam, group, cluster_tol_mu)
    _, Qd, Qdd = q_derivatives(fam)
    J = fam.space.J
    h = triplet.h
    Vd = fam.additive_operator(triplet, 1)
    Vdd = fam.additive_operator(triplet, 2)
    TE = group.ext.TE
    branches = []
    for kb in sel.branches:
        u = wexp.U @ kb.coeffs
        Tu = TE @ u
        x = Qd @ J @ Tu
        ip = lambda a, b: h * np.vdot(b, a)
        c1 = ip(Vd @ u, u).real + omega(fam.space, Qd @ Tu, Tu).real
        c2 = (0.5 * (ip(Vdd @ u, u).real + omega(fam.space, Qdd @ Tu, Tu).real)
              - np.vdot(x, group.lifted_S @ x).real
              + 2 * np.vdot(x, TE @ group.S @ Vd @ u).real
              - ip(Vd @ group.S @ Vd @ u, u).real)
        br = Branch(kb.i, kb.k, kb.mu, kb.nu, kb.mu, kb.nu / 2, u, Tu[:fam.d])
        br.routes["kato"] = (kb.mu, kb.nu / 2)
        br.routes["additive"] = (c1, c2)
        branches.append(br)
    res = ExpansionResult(group.lam, fam.t0, group.m, sel.m_prime, sel.m_prime_i, _sorted_branches(branches), "additive")
    for br in res.branches:
        _check("additive", br.routes["additive"], br.routes["kato"], res.scale)
    return res


def expand(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup, cluster_tol_mu: float = 1e-6) -> ExpansionResult:
    """Pick the formula route: additive if ``V(t)`` present, Robin if available, else Z-form."""
    if fam.has_additive:
        return expand_eigencurves_additive(triplet, fam, group, cluster_tol_mu)
    if fam.is_robin:
        return expand_eigencurves_robin(triplet, fam, group, cluster_tol_mu)
    return expand_eigencurves_Z(triplet, fam, group, cluster_tol_mu)


def predict(expansion: ExpansionResult, t: float) -> list[tuple[int, int, float]]:
    """Quadratic Taylor prediction of every branch at ``t``, sorted by value."""
    dt = t - expansion.t0
    out = [(b.i, b.k, expansion.lam + b.c1 * dt + b.c2 * dt**2) for b in expansion.branches]
    return sorted(out, key=lambda r: r[2])


# ------------------------------------------------------------ identity suite

def identity_residuals(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup) -> dict[str, float]:
    """Relative residuals of the algebraic identities behind the Z-form.

    Vector identities are evaluated on every column of the cluster basis.
    ``dqtu`` reads ``Q' T u = (I - Q) T P' u`` with ``T P' u`` taken through the
    lifting rule; ``dqtu_lift`` checks the same left side against the
    closed-form derivative of the ghost lift, ``(I - Q) T E' u``, which does
    not depend on that rule.
    """
    J = fam.space.J
    H = lambda M: M.conj().T
    Z, Zd, Zdd = (fam.Z(None, k) for k in range(3))
    Q, Qd, Qdd = q_derivatives(fam)
    I = np.eye(Q.shape[0])

    def rel(lhs, rhs):
        return float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(lhs), np.linalg.norm(rhs)))

    out = {
        "dz": rel(Zd @ J @ H(Z), -Z @ J @ H(Zd)),
        "ddz": rel(Zdd @ J @ H(Z), -2 * Zd @ J @ H(Zd) - Z @ J @ H(Zdd)),
        "dzq": rel(Zd @ Q, -Z @ Qd),
        "qdz": rel(Q @ H(Zd), -Qd @ H(Z)),
        "dqj": max(rel(Qd @ J, -J @ Qd), rel(Qdd @ J, -J @ Qdd)),
    }
    TE = group.ext.TE
    Ed = ghost_extension_derivative(triplet, fam)
    TEd = triplet.T @ Ed
    vec = {"tujzs": 0.0, "dqjtu": 0.0, "dqtu": 0.0, "dqtu_lift": 0.0}
    for u in group.U.T:
        Tu = TE @ u
        phi = np.linalg.solve(Z @ H(Z), Z @ J @ Tu)
        vec["tujzs"] = max(vec["tujzs"], rel(Tu, -J @ H(Z) @ phi))
        vec["dqjtu"] = max(vec["dqjtu"], rel(Qd @ J @ Tu, -Q @ H(Zd) @ phi))
        vec["dqtu"] = max(vec["dqtu"], rel(Qd @ Tu, (I - Q) @ group.lifted_S @ Qd @ J @ Tu))
        vec["dqtu_lift"] = max(vec["dqtu_lift"], rel(Qd @ Tu, (I - Q) @ TEd @ u))
    out.update(vec)
    return out
