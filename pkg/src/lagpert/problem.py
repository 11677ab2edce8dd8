"""Problem configurations: JSON schema, model construction and health checks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .discretization import DiscreteTriplet, build_triplet, green_defect, parse_complex_array
from .errors import ConfigError, LagpertError, SpectralPointHit
from .perturbation import (BoundaryFamily, ExpansionResult, expand, general_family, krein_residual,
                           operator_at, robin_family, sampled_family)
from .spectral import LambdaGroup, lambda_group

TOP_KEYS = {"interval", "n", "grid_points", "potential", "family", "additive", "t0", "window",
            "target", "oracle", "tolerances", "name"}

# module defaults, overridable under "tolerances"
DEFAULT_TOLERANCES = {
    "cluster_tol": 1e-8,
    "cluster_tol_mu": 1e-6,
    "green": 1e-12,
    "self_adjoint": 1e-10,
    "krein": 1e-10,
}


@dataclass
class ProblemConfig:
    interval: tuple[float, float]
    n: int
    grid_points: int
    family: dict
    t0: float = 0.0
    potential: object = None
    additive: list | None = None
    window: tuple[float, float] | None = None
    target: dict = field(default_factory=lambda: {"kind": "value", "value": 0.0})
    oracle: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    name: str | None = None

    # ------------------------------------------------------------ parsing
    @classmethod
    def from_dict(cls, d: dict) -> "ProblemConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("interval", "n", "grid_points", "family"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        try:
            a, b = (float(v) for v in d["interval"])
            n, N = int(d["n"]), int(d["grid_points"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad interval/n/grid_points: {exc}") from exc
        fam = d["family"]
        if not isinstance(fam, dict) or fam.get("type") not in ("robin", "general", "sampled"):
            raise ConfigError("family.type must be 'robin', 'general' or 'sampled'")
        target = d.get("target", {"kind": "value", "value": 0.0})
        if target.get("kind") == "value":
            if "value" not in target:
                raise ConfigError("target of kind 'value' needs 'value'")
        elif target.get("kind") == "index":
            if not isinstance(target.get("index"), int):
                raise ConfigError("target of kind 'index' needs an integer 'index'")
        else:
            raise ConfigError("target.kind must be 'value' or 'index'")
        tol = d.get("tolerances", {}) or {}
        bad = set(tol) - set(DEFAULT_TOLERANCES)
        if bad:
            raise ConfigError(f"unknown tolerance keys: {sorted(bad)}")
        window = d.get("window")
        additive = d.get("additive")
        if additive is not None and not isinstance(additive, list):
            raise ConfigError("additive must be a list of potential specs (one per power of t)")
        cfg = cls((a, b), n, N, fam, float(d.get("t0", 0.0)), d.get("potential"), additive,
                  None if window is None else (float(window[0]), float(window[1])),
                  target, dict(d.get("oracle", {}) or {}), dict(tol), d.get("name"))
        if cfg.window is not None and not cfg.window[0] <= cfg.t0 <= cfg.window[1]:
            raise ConfigError(f"t0={cfg.t0} outside window {cfg.window}")
        return cfg

    def to_dict(self) -> dict:
        out = {"interval": list(self.interval), "n": self.n, "grid_points": self.grid_points,
               "potential": self.potential, "family": self.family, "t0": self.t0,
               "target": self.target, "oracle": self.oracle}
        if self.name is not None:
            out = {"name": self.name} | out
        if self.additive is not None:
            out["additive"] = self.additive
        if self.window is not None:
            out["window"] = list(self.window)
        if self.tolerances:
            out["tolerances"] = self.tolerances
        return out

    def with_grid(self, N: int) -> "ProblemConfig":
        return ProblemConfig.from_dict(self.to_dict() | {"grid_points": int(N)})

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    # -------------------------------------------------------- construction
    @property
    def dt_ladder(self) -> tuple[float, ...]:
        from .oracle import DEFAULT_LADDER
        return tuple(float(x) for x in self.oracle.get("dt_ladder", DEFAULT_LADDER))

    def t_grid(self, t_min: float | None = None, t_max: float | None = None, steps: int | None = None) -> np.ndarray:
        g = self.oracle.get("t_grid", {})
        c = float(g.get("center", self.t0))
        hw = float(g.get("halfwidth", 0.05))
        pts = int(g.get("points", 11) if steps is None else steps)
        lo = c - hw if t_min is None else t_min
        hi = c + hw if t_max is None else t_max
        return np.linspace(lo, hi, pts)

    def triplet(self) -> DiscreteTriplet:
        a, b = self.interval
        return build_triplet(a, b, self.n, self.grid_points, self.potential)

    def boundary_family(self) -> BoundaryFamily:
        fam = self.family
        kind = fam["type"]
        additive = tuple(self.additive or ())
        d = 2 * self.n
        try:
            if kind == "robin":
                coeffs = fam["theta"]
                fb = robin_family(coeffs, self.t0, self.window, additive)
            elif kind == "general":
                fb = general_family(fam["x"], fam["y"], self.t0, self.window, additive)
            else:
                s = fam["samples"]
                fb = sampled_family([r["t"] for r in s], [r["x"] for r in s], [r["y"] for r in s],
                                    self.t0, int(fam.get("degree", 4)), additive)
        except KeyError as exc:
            raise ConfigError(f"family is missing {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"bad family coefficients: {exc}") from exc
        if fb.d != d:
            raise ConfigError(f"family blocks are {fb.d}x{fb.d}, expected {d}x{d} for n={self.n}")
        return fb


def parse_config_text(text: str) -> ProblemConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return ProblemConfig.from_dict(data)


def load_config(path: str | Path) -> ProblemConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


@dataclass
class Problem:
    """A configuration turned into numerical objects."""

    config: ProblemConfig
    triplet: DiscreteTriplet
    family: BoundaryFamily

    @classmethod
    def from_config(cls, cfg: ProblemConfig) -> "Problem":
        return cls(cfg, cfg.triplet(), cfg.boundary_family())

    def group(self) -> LambdaGroup:
        ext = operator_at(self.triplet, self.family)
        tgt = self.config.target
        if tgt["kind"] == "index":
            w = ext.spectrum[0]
            if not 0 <= tgt["index"] < len(w):
                raise ConfigError(f"target index {tgt['index']} outside 0..{len(w) - 1}")
            value = float(w[tgt["index"]])
        else:
            value = float(tgt["value"])
        return lambda_group(ext, value, self.config.tol("cluster_tol"))

    def expand(self, group: LambdaGroup | None = None) -> ExpansionResult:
        return expand(self.triplet, self.family, group or self.group(), self.config.tol("cluster_tol_mu"))


# --------------------------------------------------------------- diagnostics

@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""


def _green_check(triplet: DiscreteTriplet, rng: np.random.Generator, pairs: int, tol: float) -> CheckResult:
    worst = 0.0
    for _ in range(pairs):
        u = rng.standard_normal(triplet.full_dim) + 1j * rng.standard_normal(triplet.full_dim)
        v = rng.standard_normal(triplet.full_dim) + 1j * rng.standard_normal(triplet.full_dim)
        worst = max(worst, green_relative_defect(triplet, u, v))
    return CheckResult("green_identity", worst, tol, worst <= tol)


def green_relative_defect(triplet: DiscreteTriplet, u, v) -> float:
    """``|green_defect| / scale`` with the scale set by the two inner products."""
    lhs1 = triplet.inner(triplet.Astar @ u, triplet.restrict(v))
    lhs2 = triplet.inner(triplet.restrict(u), triplet.Astar @ v)
    scale = max(1.0, abs(lhs1), abs(lhs2), np.linalg.norm(triplet.T @ u) * np.linalg.norm(triplet.T @ v))
    return float(abs(green_defect(triplet, u, v)) / scale)


def window_points(cfg: ProblemConfig, points: int = 21) -> np.ndarray:
    if cfg.window is None:
        return np.array([cfg.t0])
    return np.unique(np.append(np.linspace(cfg.window[0], cfg.window[1], points), cfg.t0))


def krein_probes(cfg: ProblemConfig, ext_min: float) -> list[tuple[float, float]]:
    """``(t, zeta)`` pairs: ``t0 +- delta`` and ``zeta in {-1, lambda_min - 1}``."""
    delta = 0.1
    if cfg.window is not None:
        room = min(cfg.t0 - cfg.window[0], cfg.window[1] - cfg.t0)
        delta = min(delta, room) if room > 0 else delta
    zetas = sorted({-1.0, float(ext_min) - 1.0})
    return [(cfg.t0 + s * delta, z) for s in (-1, 1) for z in zetas]


def run_checks(problem: Problem, seed: int = 0, pairs: int = 100) -> list[CheckResult]:
    cfg, tr, fam = problem.config, problem.triplet, problem.family
    rng = np.random.default_rng(seed)
    out = [_green_check(tr, rng, pairs, cfg.tol("green"))]
    worst_sa, failure = 0.0, ""
    for t in window_points(cfg):
        try:
            fam.plane(t)
            ext = operator_at(tr, fam, t)
            worst_sa = max(worst_sa, ext.A.defect)
        except LagpertError as exc:
            failure = f"t={t:.6g}: {type(exc).__name__}: {exc}"
            break
    ok = not failure
    out.append(CheckResult("plane_and_resonance_scan", 0.0 if ok else 1.0, 0.0, ok, failure))
    if not ok:
        return out
    out.append(CheckResult("self_adjointness", worst_sa, cfg.tol("self_adjoint"), worst_sa <= cfg.tol("self_adjoint")))
    ext0 = operator_at(tr, fam)
    worst = 0.0
    for t, z in krein_probes(cfg, ext0.spectrum[0][0]):
        try:
            worst = max(worst, krein_residual(tr, fam, t, z))
        except SpectralPointHit:
            continue
    out.append(CheckResult("krein_residual", worst, cfg.tol("krein"), worst <= cfg.tol("krein")))
    return out


def complex_pairs(v) -> list[list[float]]:
    """Complex vector as ``[[re, im], ...]`` for JSON output."""
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).ravel()]


__all__ = ["ProblemConfig", "Problem", "CheckResult", "load_config", "parse_config_text", "run_checks",
           "green_relative_defect", "complex_pairs", "parse_complex_array", "DEFAULT_TOLERANCES"]
