"""
Command-line front end.

    poisson-reduce simulate-full CONFIG [CONFIG ...]
    poisson-reduce simulate-reduced CONFIG [CONFIG ...]
    poisson-reduce verify [CONFIG] [--checks ID,ID]
    poisson-reduce plot CSV SVG

Global flags: ``--jobs N``, ``--seed INT``, ``--quiet``. Logging level comes
from ``POISSON_REDUCE_LOG`` (error, warn, info, debug).

Exit codes: 0 success, 1 config/IO/schema error, 2 runtime failure
(including a blown invariant), 3 trajectory reached a turning region,
4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import config as config_mod
from .errors import ConfigError, PoissonReduceError, SchemaError, TurningRegion
from .output import atomic_write
from .plot import plot
from .runs import run_full, run_reduced
from .verify import CHECKS, VerifyContext, run_battery, summary

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_TURNING, EXIT_VERIFY = 0, 1, 2, 3, 4
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
              "debug": logging.DEBUG}

log = logging.getLogger("poisson_reduce")


def _setup_logging(quiet: bool):
    name = os.environ.get("POISSON_REDUCE_LOG", "warn").lower()
    level = LOG_LEVELS.get(name, logging.WARNING)
    if quiet:
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
    if name not in LOG_LEVELS:
        log.warning("POISSON_REDUCE_LOG=%r not understood; using warn", name)


def _error(msg: str):
    print(f"poisson-reduce: {msg}", file=sys.stderr)


def _simulate_one(kind: str, path: str, quiet: bool) -> int:
    try:
        cfg = config_mod.load(path)
        result = run_full(cfg) if kind == "full" else run_reduced(cfg)
        csv_path = cfg.output_path("trajectory_csv")
        if csv_path is not None:
            atomic_write(csv_path, result.csv)
        report_path = cfg.output_path("report_json")
        if report_path is not None:
            atomic_write(report_path, result.report.to_json())
        svg_path = cfg.output_path("plot_svg")
        if svg_path is not None:
            if csv_path is None:
                raise ConfigError("outputs.plot_svg: needs outputs.trajectory_csv")
            plot(csv_path, svg_path)
    except (ConfigError, SchemaError) as exc:
        _error(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _error(f"{exc.filename or path}: {exc.strerror or exc}")
        return EXIT_CONFIG
    except TurningRegion as exc:
        _error(f"{path}: turning region reached: {exc}")
        return EXIT_TURNING
    except (PoissonReduceError, ArithmeticError, ValueError) as exc:
        _error(f"{path}: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    if not quiet:
        print(result.report.to_json(), end="")
    return EXIT_OK


def _fan_out(kind: str, paths, jobs: int, quiet: bool) -> int:
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            codes = list(pool.map(_simulate_one, [kind] * len(paths), paths, [quiet] * len(paths)))
    else:
        codes = [_simulate_one(kind, p, quiet) for p in paths]
    return max(codes)


def cmd_simulate_full(args) -> int:
    return _fan_out("full", args.configs, args.jobs, args.quiet)


def cmd_simulate_reduced(args) -> int:
    return _fan_out("reduced", args.configs, args.jobs, args.quiet)


def cmd_verify(args) -> int:
    try:
        cfg = config_mod.load(args.config) if args.config else None
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_CONFIG
    ids = [c.strip() for c in args.checks.split(",") if c.strip()] if args.checks else None
    if ids:
        unknown = [c for c in ids if c not in CHECKS]
        if unknown:
            _error(f"unknown check(s) {unknown}; available: {sorted(CHECKS)}")
            return EXIT_CONFIG
    results = run_battery(VerifyContext.from_config(cfg, args.seed), ids, args.jobs)
    report = summary(results, args.seed)
    if not args.quiet:
        print(json.dumps(report, indent=2))
    if not report["passed"]:
        _error("failed checks: " + ", ".join(report["failed"]))
        return EXIT_VERIFY
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        plot(args.csv, args.svg)
    except SchemaError as exc:
        _error(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _error(f"{exc.filename or args.csv}: {exc.strerror or exc}")
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def globals_(parser, suppress):
        # subcommands repeat the flags without defaults so they never mask the top-level ones
        default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        parser.add_argument("--jobs", type=int, default=default(1), metavar="N",
                            help="worker processes for independent runs or checks")
        parser.add_argument("--seed", type=int, default=default(0),
                            help="seed for verification sampling")
        parser.add_argument("--quiet", action="store_true", default=default(False),
                            help="only print errors")

    common = argparse.ArgumentParser(add_help=False)
    globals_(common, suppress=True)
    p = argparse.ArgumentParser(prog="poisson-reduce",
                                description="Rigid body on the Poisson sphere: simulate, verify, plot.")
    globals_(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("simulate-full", cmd_simulate_full, "integrate (Q, omega) from a config"),
                               ("simulate-reduced", cmd_simulate_reduced,
                                "integrate the reduced system on the sphere")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("configs", nargs="+", metavar="config")
        s.set_defaults(func=fn)
    v = sub.add_parser("verify", parents=[common], help="run the property battery")
    v.add_argument("config", nargs="?")
    v.add_argument("--checks", help="comma-separated subset of: " + ", ".join(CHECKS))
    v.set_defaults(func=cmd_verify)
    pl = sub.add_parser("plot", parents=[common], help="render a trajectory CSV to SVG")
    pl.add_argument("csv")
    pl.add_argument("svg")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        _error("--jobs must be >= 1")
        return EXIT_CONFIG
    _setup_logging(args.quiet)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
