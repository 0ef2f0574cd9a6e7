"""Command-line entry point: ``tbaudit <subcommand> [options]``.

Exit codes: 0 when every non-passing result is listed in the expected-verdict
ledger, 1 on an unexpected failure (or a geodesic leaving its chart), 2 on
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import __version__
from .audit import (
    GROUPS,
    AuditConfig,
    ConfigError,
    render_report,
    run_audit,
    write_atomic,
)
from .base import BUILTIN_METRICS, GeometryError
from .fields import FIELD_NAMES
from .geodesic import CONNECTIONS, geodesic_from, geodesic_integrate

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
SEED_ENV = "TBAUDIT_SEED"

# subcommand -> claim groups it runs
SUBCOMMAND_GROUPS = {
    "audit": GROUPS,
    "connection": ("connection",),
    "lifts": ("lifts",),
    "killing": ("killing",),
    "curvature": ("curvature",),
}


def _add_metric_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--metric", help=f"base metric, one of {', '.join(BUILTIN_METRICS)}")
    p.add_argument("--dim", type=int, help="dimension for euclidean / flat_torus")
    p.add_argument("--radius", type=float, help="sphere radius")
    p.add_argument("--params", type=float, nargs="+", help="raw metric parameters (overrides --dim/--radius)")


def _add_audit_args(p: argparse.ArgumentParser, field_required: bool = False) -> None:
    _add_metric_args(p)
    p.add_argument("--config", help="JSON file with AuditConfig keys; flags override it")
    p.add_argument("--samples", type=int, help="number of seeded bundle points")
    p.add_argument("--seed", type=int, help=f"RNG seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--y-max", type=float, dest="y_max", help="fiber sampling radius |y| <= y_max")
    p.add_argument("--tol-pass", type=float, dest="tolerance_pass", help="PASS threshold")
    p.add_argument("--tol-fail", type=float, dest="tolerance_fail", help="FAIL threshold")
    p.add_argument("--claims", nargs="+", help="claim ids or id prefixes to run")
    if field_required:
        p.add_argument("--field", dest="fields", action="append", required=True, choices=FIELD_NAMES,
                       help="named base field (repeatable)")
    else:
        p.add_argument("--fields", nargs="+", choices=FIELD_NAMES, help="named base fields")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--out", help="write the report here (atomic) instead of stdout")
    p.add_argument("--timing", action="store_true", help="record wall-clock time in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbaudit",
        description="Numerical audit of closed-form geometry of the Cheeger-Gromoll metric on TM.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "audit": "full run over all claim groups",
        "connection": "Levi-Civita connection families only",
        "lifts": "lift calculus claims only",
        "killing": "Lie derivative / Killing claims for chosen fields",
        "curvature": "curvature families only",
    }
    for name, text in helps.items():
        _add_audit_args(sub.add_parser(name, help=text, description=text), field_required=name == "killing")

    geo = sub.add_parser("geodesic", help="integrate a geodesic of TM, CSV output",
                         description="RK4 geodesic of (TM, CG metric) in induced coordinates.")
    _add_metric_args(geo)
    geo.add_argument("--x", type=float, nargs="+", required=True, help="base point")
    geo.add_argument("--y", type=float, nargs="+", required=True, help="fiber point")
    geo.add_argument("--v", type=float, nargs="+", required=True, help="initial velocity (2n components)")
    geo.add_argument("--steps", type=int, required=True, help="number of RK4 steps")
    geo.add_argument("--dt", type=float, required=True, help="step size")
    geo.add_argument("--connection", choices=CONNECTIONS, default="jet",
                     help="how induced-coordinate Christoffel symbols are evaluated")
    geo.add_argument("--out", help="write the CSV here (atomic) instead of stdout")
    return parser


def _metric_params(args: argparse.Namespace) -> list[float] | None:
    if args.params is not None:
        return list(args.params)
    if args.dim is not None:
        return [float(args.dim)]
    if args.radius is not None:
        return [args.radius]
    return None


def _seed_from_env() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc


def config_from_args(args: argparse.Namespace) -> AuditConfig:
    """File values first, then explicit flags; the seed falls back to the environment."""
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    if "seed" not in data:
        env = _seed_from_env()
        if env is not None:
            data["seed"] = env
    for key in ("metric", "samples", "seed", "y_max", "tolerance_pass", "tolerance_fail", "claims", "fields"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    params = _metric_params(args)
    if params is not None:
        data["params"] = params
    try:
        return AuditConfig.from_dict(data).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _run_audit(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    report = run_audit(config, groups=SUBCOMMAND_GROUPS[args.command], with_timing=args.timing)
    _emit(render_report(report, args.format), args.out)
    if report.unexpected:
        print("unexpected: " + ", ".join(report.unexpected), file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _run_geodesic(args: argparse.Namespace) -> int:
    if args.metric is None:
        raise ConfigError("--metric is required")
    if args.metric not in BUILTIN_METRICS:
        raise ConfigError(f"unknown metric {args.metric!r}; expected one of {BUILTIN_METRICS}")
    from .base import builtin_metric

    try:
        m = builtin_metric(args.metric, _metric_params(args) or [])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    n = m.dim
    if len(args.x) != n or len(args.y) != n or len(args.v) != 2 * n:
        raise ConfigError(f"need {n} values for --x and --y and {2 * n} for --v")
    if not m.contains(args.x):
        raise ConfigError("--x lies outside the chart domain")
    if args.steps < 0 or not args.dt > 0:
        raise ConfigError("need --steps >= 0 and --dt > 0")
    traj = geodesic_integrate(m, geodesic_from(m, args.x, args.y, args.v), args.dt, args.steps, args.connection)
    _emit(traj.to_csv(), args.out)
    if not traj.complete:
        print(f"trajectory left the chart at step {traj.exit_index}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    try:
        if args.command == "geodesic":
            return _run_geodesic(args)
        return _run_audit(args)
    except (ConfigError, GeometryError) as exc:
        print(f"tbaudit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
