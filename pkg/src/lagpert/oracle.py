"""Independent ground truth for the expansion engine.

Everything here diagonalizes ``A_t`` (or ``A_t + V(t)``) directly: curves are
tracked over a parameter grid by eigenvector overlap, their derivatives are
taken by central differences with Richardson extrapolation, and the result is
compared with an :class:`~lagpert.perturbation.ExpansionResult`.  Contour
quadrature of the resolvent gives a second route to ``P`` and ``S``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .discretization import DiscreteTriplet, ExtensionOperator
from .errors import LadderInconsistent, NotIsolated, TrackingAmbiguity
from .perturbation import BoundaryFamily, ExpansionResult, operator_at, predict
from .spectral import LambdaGroup, resolvent

DEFAULT_LADDER = (1e-3, 5e-4, 2.5e-4)
MARGIN = 0.1
C1_TOL = 1e-6
C2_TOL = 1e-4
EIG_NOISE = 1e-10

ORACLE_COLUMNS = ("branch_i", "branch_k", "mu", "nu", "c1_formula", "c2_formula",
                  "c1_fd", "c2_fd", "abs_dev_c1", "abs_dev_c2", "pass")


def fmt(x) -> str:
    """17 significant digits, the CSV float format."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


# ------------------------------------------------------------------ tracking

@dataclass
class Curves:
    """Tracked eigenvalue curves: ``values[j, b]`` is branch ``b`` at ``t_grid[j]``."""

    t_grid: np.ndarray
    values: np.ndarray
    margins: np.ndarray

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def curve(self, b: int) -> dict[float, float]:
        return {float(t): float(v) for t, v in zip(self.t_grid, self.values[:, b])}


def _cluster_pairs(ext: ExtensionOperator, lam: float, radius: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    w, U = ext.spectrum
    idx = np.argsort(np.abs(w - lam))[:m]
    idx = np.sort(idx)
    if np.abs(w[idx] - lam).max() >= radius:
        raise NotIsolated(f"fewer than {m} eigenvalues within {radius:.3g} of {lam:.6g}")
    return w[idx], U[:, idx]


def _match(prev: np.ndarray, vecs: np.ndarray, h: float) -> tuple[np.ndarray, float]:
    """Greedy assignment ``prev[:, j] -> vecs[:, perm[j]]`` by squared overlap."""
    O = np.abs(h * prev.conj().T @ vecs) ** 2
    m = O.shape[0]
    perm = -np.ones(m, dtype=int)
    work = O.copy()
    for _ in range(m):
        j, k = np.unravel_index(np.argmax(work), work.shape)
        perm[j] = k
        work[j, :] = -1.0
        work[:, k] = -1.0
    margin = np.inf
    for j in range(m):
        others = np.delete(O[j], perm[j])
        second = others.max() if others.size else 0.0
        margin = min(margin, O[j, perm[j]] - second)
    return perm, float(margin)


def track_curves(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup,
                 t_grid: Sequence[float], margin: float = MARGIN) -> Curves:
    """Follow the ``m`` cluster eigenvalues over ``t_grid`` by overlap continuation.

    Labels are fixed at the grid point closest to ``t0`` on its right (the
    eigenbasis at ``t0`` itself is arbitrary for a multiple eigenvalue); both
    sides of ``t0`` are continued outward from there.
    """
    ts = np.asarray(t_grid, dtype=float)
    order = np.unique(ts)
    t0, m, lam, h = fam.t0, group.m, group.lam, triplet.h
    pairs = {}
    for t in order:
        if t == t0:
            continue
        pairs[t] = _cluster_pairs(operator_at(triplet, fam, t), lam, group.radius, m)
    right = [t for t in order if t > t0]
    left = [t for t in order if t < t0][::-1]
    vals: dict[float, np.ndarray] = {}
    margins: dict[float, float] = {}
    if t0 in order:
        vals[t0] = np.full(m, lam) if m > 1 else _cluster_pairs(group.ext, lam, group.radius, 1)[0]
        margins[t0] = 1.0
    if not right and not left:
        return Curves(ts, np.array([vals[t] for t in ts]), np.ones(len(ts)))
    anchor = right[0] if right else left[0]
    ref = pairs[anchor][1]
    for side in (right, left):
        prev = ref
        for t in side:
            w, V = pairs[t]
            perm, mg = _match(prev, V, h)
            if mg < margin:
                raise TrackingAmbiguity(f"overlap margin {mg:.3f} < {margin} at t={t:.6g}; refine the grid")
            vals[t] = w[perm]
            margins[t] = mg
            prev = V[:, perm]
    return Curves(ts, np.array([vals[t] for t in ts]), np.array([margins[t] for t in ts]))


# --------------------------------------------------------- finite differences

@dataclass
class FDEstimate:
    c1: float
    c2: float
    err_c1: float
    err_c2: float
    ladder: list[dict] = field(default_factory=list)


def _richardson(dts: Sequence[float], est: Sequence) -> list:
    """Neville extrapolation to ``dt = 0`` in the variable ``dt^2``."""
    table = [list(est)]
    for level in range(1, len(est)):
        prev = table[-1]
        row = []
        for j in range(len(prev) - 1):
            q = (dts[j] / dts[j + level]) ** 2
            row.append(prev[j + 1] + (prev[j + 1] - prev[j]) / (q - 1))
        table.append(row)
    return table


def fd_derivatives(curve: Callable[[float], float] | dict, t0: float, dt_ladder: Sequence[float] = DEFAULT_LADDER,
                   noise: float | None = None) -> FDEstimate:
    """First derivative and half the second derivative of a scalar curve at ``t0``.

    ``curve`` is a callable or a mapping ``t -> value`` containing ``t0`` and
    ``t0 +- dt`` for each ``dt`` (matched to 1e-12).  The ladder must be
    strictly decreasing.  Raises :class:`LadderInconsistent` when the raw
    differences fail to contract as ``dt^2`` beyond ``100x`` the noise model.
    """
    dts = [float(d) for d in dt_ladder]
    if len(dts) < 2 or any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dt ladder needs at least two strictly decreasing steps")
    look = _lookup(curve)
    f0 = look(t0)
    noise = EIG_NOISE * max(1.0, abs(f0)) if noise is None else noise
    d1, d2, rows = [], [], []
    for dt in dts:
        fp, fm = look(t0 + dt), look(t0 - dt)
        d1.append((fp - fm) / (2 * dt))
        d2.append((fp - 2 * f0 + fm) / (2 * dt**2))
        rows.append({"dt": dt, "c1": d1[-1], "c2": d2[-1]})
    for est, k in ((d1, 1), (d2, 2)):
        for j in range(len(est) - 2):
            r = dts[j + 1] / dts[j + 2]
            first, second = abs(est[j + 1] - est[j]), abs(est[j + 2] - est[j + 1])
            floor = noise / dts[-1] ** k
            if second > 100 * (first / r**2 + floor):
                raise LadderInconsistent(f"order-{k} estimates do not contract: {first:.3e} then {second:.3e}")
    t1, t2 = _richardson(dts, d1), _richardson(dts, d2)
    err1 = abs(t1[-1][0] - t1[-2][-1]) if len(t1) > 1 else abs(d1[-1] - d1[-2])
    err2 = abs(t2[-1][0] - t2[-2][-1]) if len(t2) > 1 else abs(d2[-1] - d2[-2])
    return FDEstimate(float(t1[-1][0]), float(t2[-1][0]), float(err1), float(err2), rows)


def _lookup(curve):
    if callable(curve):
        return lambda t: float(curve(t))
    keys = np.array(sorted(curve))

    def look(t):
        j = int(np.argmin(np.abs(keys - t)))
        if abs(keys[j] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"curve has no sample at t={t!r}")
        return float(curve[keys[j]])

    return look


def ladder_grid(t0: float, dt_ladder: Sequence[float] = DEFAULT_LADDER) -> np.ndarray:
    """The symmetric grid ``t0, t0 +- dt`` needed by :func:`fd_derivatives`."""
    pts = {float(t0)}
    for dt in dt_ladder:
        pts.update({float(t0 + dt), float(t0 - dt)})
    return np.array(sorted(pts))


def matrix_derivatives(fn: Callable[[float], np.ndarray], t0: float,
                       dt_ladder: Sequence[float] = (1e-2, 5e-3, 2.5e-3)) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives of a matrix-valued map by Richardson central differences."""
    dts = [float(d) for d in dt_ladder]
    f0 = fn(t0)
    d1, d2 = [], []
    for dt in dts:
        fp, fm = fn(t0 + dt), fn(t0 - dt)
        d1.append((fp - fm) / (2 * dt))
        d2.append((fp - 2 * f0 + fm) / dt**2)
    return _richardson(dts, d1)[-1][0], _richardson(dts, d2)[-1][0]


# ---------------------------------------------------------------- comparison

@dataclass
class OracleRow:
    branch_i: int
    branch_k: int
    mu: float
    nu: float
    c1_formula: float
    c2_formula: float
    c1_fd: float
    c2_fd: float
    abs_dev_c1: float
    abs_dev_c2: float
    passed: bool
    scale: float


@dataclass
class OracleReport:
    lam: float
    t0: float
    t_grid: list[float]
    curves: list[list[float]]
    fd: list[FDEstimate]
    rows: list[OracleRow]
    convergence_table: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ORACLE_COLUMNS)
        for r in self.rows:
            w.writerow([fmt(r.branch_i), fmt(r.branch_k), fmt(r.mu), fmt(r.nu), fmt(r.c1_formula),
                        fmt(r.c2_formula), fmt(r.c1_fd), fmt(r.c2_fd), fmt(r.abs_dev_c1),
                        fmt(r.abs_dev_c2), fmt(r.passed)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "t0": self.t0,
            "passed": self.passed,
            "rows": [{c: getattr(r, "passed" if c == "pass" else c) for c in ORACLE_COLUMNS} | {"scale": r.scale}
                     for r in self.rows],
            "fd": [{"c1": e.c1, "c2": e.c2, "err_c1": e.err_c1, "err_c2": e.err_c2, "ladder": e.ladder}
                   for e in self.fd],
            "t_grid": list(self.t_grid),
            "curves": self.curves,
            "convergence_table": [list(r) for r in self.convergence_table],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _order_estimates(est: list[tuple[float, float]], tol: float) -> list[tuple[float, float]]:
    """Sort by ``c1``; inside runs of ``c1`` closer than ``tol`` sort by ``c2``."""
    est = sorted(est, key=lambda e: e[0])
    out: list[tuple[float, float]] = []
    run: list[tuple[float, float]] = []
    for e in est:
        if run and e[0] - run[-1][0] > tol:
            out += sorted(run, key=lambda r: r[1])
            run = []
        run.append(e)
    return out + sorted(run, key=lambda r: r[1])


def compare(engine: ExpansionResult, fd: Sequence[FDEstimate], c1_tol: float = C1_TOL,
            c2_tol: float = C2_TOL) -> list[OracleRow]:
    """Multiset comparison of engine coefficients with finite-difference estimates.

    Curves carry no intrinsic labels, so both sides are ordered by ``c1``
    and, within ``c1`` ties, by ``c2`` before pairing.
    """
    if len(fd) != len(engine.branches):
        raise ValueError(f"{len(fd)} oracle curves for {len(engine.branches)} branches")
    scale = engine.scale
    oracle = _order_estimates([(e.c1, e.c2) for e in fd], 1e-4 * scale)
    rows = []
    for b, (o1, o2) in zip(engine.branches, oracle):
        s = max(1.0, abs(engine.lam), abs(b.c1), abs(b.c2))
        dev1, dev2 = abs(b.c1 - o1), abs(b.c2 - o2)
        rows.append(OracleRow(b.i, b.k, b.mu, b.nu, b.c1, b.c2, o1, o2, dev1, dev2,
                              bool(dev1 <= c1_tol * s and dev2 <= c2_tol * s), s))
    return rows


def run_oracle(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup, engine: ExpansionResult,
               dt_ladder: Sequence[float] = DEFAULT_LADDER, extra_grid: Sequence[float] = ()) -> OracleReport:
    """Track, differentiate and compare in one call."""
    grid = np.union1d(ladder_grid(fam.t0, dt_ladder), np.asarray(extra_grid, dtype=float))
    curves = track_curves(triplet, fam, group, grid)
    fd = [fd_derivatives(curves.curve(b), fam.t0, dt_ladder) for b in range(curves.m)]
    rows = compare(engine, fd)
    return OracleReport(engine.lam, fam.t0, [float(t) for t in grid], curves.values.T.tolist(), fd, rows)


def predicted_oracle(engine: ExpansionResult, dt_ladder: Sequence[float] = DEFAULT_LADDER) -> OracleReport:
    """Closing check: finite differences of the quadratic prediction itself."""
    fd = []
    for b in engine.branches:
        f = lambda t, b=b: engine.lam + b.c1 * (t - engine.t0) + b.c2 * (t - engine.t0) ** 2
        fd.append(fd_derivatives(f, engine.t0, dt_ladder))
    rows = compare(engine, fd)
    return OracleReport(engine.lam, engine.t0, [], [], fd, rows)


def sweep(triplet: DiscreteTriplet, fam: BoundaryFamily, group: LambdaGroup, engine: ExpansionResult,
          t_grid: Sequence[float]) -> list[tuple[float, int, int, float, float, float]]:
    """Rows ``(t, i, k, predicted, tracked, tracked - predicted)``.

    Predicted and tracked values are paired by rank at each ``t``.
    """
    grid = np.asarray(t_grid, dtype=float)
    curves = track_curves(triplet, fam, group, grid)
    out = []
    for j, t in enumerate(grid):
        pred = predict(engine, t)
        tracked = np.sort(curves.values[j])
        for (i, k, p), tr in zip(pred, tracked):
            out.append((float(t), i, k, float(p), float(tr), float(tr - p)))
    return out


# --------------------------------------------------------------- refinement

def extrapolate_in_N(Ns: Sequence[int], values: Sequence[float]) -> tuple[float, np.ndarray]:
    """Least-squares fit ``c(N) = c_inf + a/N + b/N^2``; returns ``c_inf`` and all coefficients."""
    Ns = np.asarray(Ns, dtype=float)
    M = np.stack([np.ones_like(Ns), 1 / Ns, 1 / Ns**2], axis=1)
    coef = np.linalg.lstsq(M, np.asarray(values, dtype=float), rcond=None)[0]
    return float(coef[0]), coef


def convergence_table(build: Callable[[int], ExpansionResult], Ns: Sequence[int]) -> list[tuple[int, float, float]]:
    """``(N, c1, c2)`` of the first branch for each grid size."""
    rows = []
    for N in Ns:
        res = build(int(N))
        rows.append((int(N), res.branches[0].c1, res.branches[0].c2))
    return rows


# ----------------------------------------------------------- contour oracles

def _circle(lam: float, radius: float, points: int):
    theta = 2 * np.pi * (np.arange(points) + 0.5) / points
    return lam + radius * np.exp(1j * theta), radius * np.exp(1j * theta) / points


def riesz_projection_quadrature(ext: ExtensionOperator, lam: float, radius: float, points: int = 64) -> np.ndarray:
    """``P = -(1/2 pi i) \\oint R(z) dz`` by the trapezoid rule on ``|z - lam| = radius``."""
    P = np.zeros((ext.dim, ext.dim), dtype=complex)
    for z, wgt in zip(*_circle(lam, radius, points)):
        P -= wgt * resolvent(ext, z)
    return P


def reduced_resolvent_quadrature(ext: ExtensionOperator, lam: float, radius: float, points: int = 64) -> np.ndarray:
    """``S = -(1/2 pi i) \\oint (lam - z)^{-1} R(z) dz`` on the same circle."""
    S = np.zeros((ext.dim, ext.dim), dtype=complex)
    for z, wgt in zip(*_circle(lam, radius, points)):
        S -= wgt * resolvent(ext, z) / (lam - z)
    return S
