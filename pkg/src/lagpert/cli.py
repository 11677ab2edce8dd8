"""Command line entry point: ``lagpert check|expand|oracle|sweep|gallery``.

Exit codes: 0 success, 2 numerical or validation failure, 3 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .errors import BadGrid, BadPotential, ConfigError, DimensionMismatch, LagpertError, TrackingAmbiguity, UnknownGallery
from .gallery import gallery_config, gallery_names
from .oracle import fmt, predicted_oracle, run_oracle, sweep
from .problem import Problem, ProblemConfig, complex_pairs, load_config, run_checks

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3

EXPAND_COLUMNS = ("i", "k", "lambda", "mu", "nu", "c1", "c2")
SWEEP_COLUMNS = ("t", "branch_i", "branch_k", "lambda_predicted", "lambda_tracked", "residual")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lagpert", description="Eigenvalue curves of boundary-condition families.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, needs_problem=True):
        if needs_problem:
            src = sp.add_mutually_exclusive_group(required=True)
            src.add_argument("--config", help="problem configuration (JSON)")
            src.add_argument("--gallery", metavar="NAME", help="use a built-in problem")
        sp.add_argument("--out", help="output directory (default: print to stdout)")
        sp.add_argument("--format", choices=("csv", "json", "both"), default="csv")
        sp.add_argument("--seed", type=int, default=0, help="seed for random test vectors")

    common(sub.add_parser("check", help="validate the model instance"))
    common(sub.add_parser("expand", help="second-order eigencurve coefficients"))
    sp = sub.add_parser("oracle", help="compare coefficients with tracked eigencurves")
    common(sp)
    sp.add_argument("--predict-only", action="store_true", help="differentiate the prediction itself")
    sp = sub.add_parser("sweep", help="predicted vs tracked curves on a t-grid")
    common(sp)
    sp.add_argument("--t-min", type=float)
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--steps", type=int)
    sp = sub.add_parser("gallery", help="write a built-in configuration")
    sp.add_argument("name", nargs="?", help=f"one of {', '.join(gallery_names())}")
    sp.add_argument("--list", action="store_true")
    sp.add_argument("--out", help="directory to write NAME.json into (default: stdout)")
    return p


def _config(args) -> ProblemConfig:
    if args.gallery:
        return ProblemConfig.from_dict(gallery_config(args.gallery))
    return load_config(args.config)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def _emit(args, stem: str, csv_text: str | None, payload: dict) -> None:
    outputs = []
    if args.format in ("csv", "both") and csv_text is not None:
        outputs.append((f"{stem}.csv", csv_text))
    if args.format in ("json", "both") or csv_text is None:
        outputs.append((f"{stem}.json", json.dumps(payload, indent=2) + "\n"))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for fname, text in outputs:
            (out / fname).write_text(text)
            print(f"wrote {out / fname}")
    else:
        for _, text in outputs:
            sys.stdout.write(text)


def cmd_check(args) -> int:
    cfg = _config(args)
    problem = Problem.from_config(cfg)
    results = run_checks(problem, seed=args.seed)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extra = f"  ({r.detail})" if r.detail else ""
        print(f"{status} {r.name}: {r.value:.3e} (threshold {r.threshold:.1e}){extra}")
    if args.out or args.format != "csv":
        payload = {"checks": [{"name": r.name, "value": r.value, "threshold": r.threshold,
                               "passed": r.passed, "detail": r.detail} for r in results]}
        _emit(args, "check", None, payload)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def cmd_expand(args) -> int:
    problem = Problem.from_config(_config(args))
    res = problem.expand()
    rows = [(b.i, b.k, res.lam, b.mu, b.nu, b.c1, b.c2) for b in res.branches]
    payload = {
        "lambda": res.lam, "t0": res.t0, "m": res.m, "m_prime": res.m_prime, "m_prime_i": res.m_prime_i,
        "formula_used": res.formula_used,
        "branches": [{"i": b.i, "k": b.k, "mu": b.mu, "nu": b.nu, "c1": b.c1, "c2": b.c2,
                      "gamma0_u": complex_pairs(b.gamma0),
                      "phi": None if b.phi is None else complex_pairs(b.phi),
                      "routes": {k: list(v) for k, v in b.routes.items()}} for b in res.branches],
    }
    _emit(args, "expand", _csv(EXPAND_COLUMNS, rows), payload)
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _config(args)
    problem = Problem.from_config(cfg)
    group = problem.group()
    res = problem.expand(group)
    if args.predict_only:
        rep = predicted_oracle(res, cfg.dt_ladder)
    else:
        rep = run_oracle(problem.triplet, problem.family, group, res, cfg.dt_ladder)
    _emit(args, "oracle", rep.to_csv(), rep.to_dict())
    return EXIT_OK if rep.passed else EXIT_NUMERIC


def cmd_sweep(args) -> int:
    cfg = _config(args)
    problem = Problem.from_config(cfg)
    group = problem.group()
    res = problem.expand(group)
    grid = cfg.t_grid(args.t_min, args.t_max, args.steps)
    rows = sweep(problem.triplet, problem.family, group, res, grid)
    payload = {"lambda": res.lam, "t0": res.t0,
               "rows": [dict(zip(SWEEP_COLUMNS, r)) for r in rows]}
    _emit(args, "sweep", _csv(SWEEP_COLUMNS, rows), payload)
    return EXIT_OK


def cmd_gallery(args) -> int:
    if args.list or not args.name:
        print("\n".join(gallery_names()))
        return EXIT_OK if args.list else EXIT_USAGE
    text = json.dumps(gallery_config(args.name), indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.name}.json").write_text(text)
        print(f"wrote {out / (args.name + '.json')}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"check": cmd_check, "expand": cmd_expand, "oracle": cmd_oracle, "sweep": cmd_sweep,
            "gallery": cmd_gallery}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UnknownGallery, BadGrid, BadPotential, DimensionMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrackingAmbiguity as exc:
        print(f"tracking failed: {exc} (use a finer t-grid or smaller dt ladder)", file=sys.stderr)
        return EXIT_NUMERIC
    except (LagpertError, ValueError, KeyError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
