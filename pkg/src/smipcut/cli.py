"""Command-line surface: generate, solve, verify, bench.

Exit codes: 0 success, 2 usage or input errors, 3 solve stopped at a limit,
4 verification failure.  All outputs are JSON/CSV files (figures rendered
next to them); logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import driver, fixtures, instances, report, verify
from .model import SmipError, instance_from_json, instance_to_json

log = logging.getLogger("smipcut")

EXIT_OK, EXIT_USAGE, EXIT_LIMIT, EXIT_VERIFY = 0, 2, 3, 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--verbose", "-v", action="count", default=0,
                   help="increase stderr log level")
    p.add_argument("--config", help="JSON file whose keys mirror the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smipcut",
        description="Two-stage stochastic MIP solving with hinge Lagrangian "
                    "cuts, classical cut families, and a verification oracle.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a benchmark or fixture instance")
    gen.add_argument("--family", choices=sorted(instances.FAMILIES))
    gen.add_argument("--fixture", choices=sorted(fixtures.INSTANCES))
    for flag in ("--J", "--I", "--JB", "--T", "--K"):
        gen.add_argument(flag, type=int)
    gen.add_argument("-N", "--scenarios", type=int, default=1, dest="N")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--out", required=True)
    _add_common(gen)

    sol = sub.add_parser("solve", help="run the cutting-plane solver")
    sol.add_argument("instance", help="instance JSON file or fixture name")
    sol.add_argument("--cuts", default="r",
                     help="preset l|b|sb|r|al|lag or comma-separated tokens")
    sol.add_argument("--gap", type=float, default=1e-4)
    sol.add_argument("--time-limit", type=float, default=3600.0)
    sol.add_argument("--iterations", type=int, default=10000)
    sol.add_argument("--agg", choices=("single", "multi"), default="single")
    sol.add_argument("--strategy", choices=("auto", "obj", "box", "cone"),
                     default="auto")
    sol.add_argument("--objective-cuts", action="store_true")
    sol.add_argument("--no-warm-start", action="store_true")
    sol.add_argument("--rho", choices=("closed", "search"), default="closed")
    sol.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sol.add_argument("--seed", type=int)
    sol.add_argument("--out", help="report JSON path (default stdout)")
    sol.add_argument("--plot", action="store_true",
                     help="render a convergence figure next to the report")
    _add_common(sol)

    ver = sub.add_parser("verify", help="run fixture verification suites")
    ver.add_argument("--fixture", default="all",
                     help="fixture name or 'all'")
    ver.add_argument("--out", help="verdicts JSON path (default stdout)")
    _add_common(ver)

    ben = sub.add_parser("bench", help="run a benchmark spec")
    ben.add_argument("spec", help="benchmark spec JSON file")
    ben.add_argument("--out", required=True, help="CSV output path")
    ben.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_common(ben)
    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            for key, value in json.load(fh).items():
                attr = key.replace("-", "_")
                if hasattr(args, attr):
                    setattr(args, attr, value)


def _load_instance(path_or_name: str):
    if path_or_name.lower() in fixtures.INSTANCES:
        return fixtures.get_instance(path_or_name)
    path = Path(path_or_name)
    if not path.exists():
        raise FileNotFoundError(f"no such instance file: {path}")
    return instance_from_json(path.read_text())


def cmd_generate(args) -> int:
    if (args.family is None) == (args.fixture is None):
        log.error("generate needs exactly one of --family or --fixture")
        return EXIT_USAGE
    if args.fixture:
        inst = fixtures.get_instance(args.fixture)
    else:
        row = {"family": args.family, "N": args.N, "seed": args.seed}
        for key in ("J", "I", "JB", "T", "K"):
            value = getattr(args, key, None)
            if value is not None:
                row[key] = value
        inst = instances.generate(instances.GeneratorSpec.from_dict(row))
    Path(args.out).write_text(instance_to_json(inst))
    log.info("wrote %s", args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    config = driver.DriverConfig.with_cuts(
        args.cuts, aggregation=args.agg, gap_tol=args.gap,
        time_limit=args.time_limit, iteration_limit=args.iterations,
        strategy=args.strategy, objective_cuts=args.objective_cuts,
        warm_start=not args.no_warm_start, rho_method=args.rho,
        jobs=args.jobs, seed=args.seed)
    result = driver.solve_general(inst, config)
    log.info("status=%s lb=%.6g ub=%.6g gap=%.3g iterations=%d",
             result.status, result.lower_bound, result.upper_bound,
             result.gap, result.iterations)
    if args.out:
        report.write_report_json(result, args.out)
        if args.plot:
            report.render_convergence(result, str(Path(args.out).with_suffix(".png")))
    else:
        json.dump(result.to_dict(), sys.stdout, sort_keys=True, indent=1)
        sys.stdout.write("\n")
    if result.status in ("iteration_limit", "time_limit"):
        return EXIT_LIMIT
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        verdicts = verify.run_suite(args.fixture)
    except KeyError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    text = json.dumps(verdicts, sort_keys=True, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    failed = [v["check"] for v in verdicts if not v["pass"]]
    if failed:
        log.error("failed checks: %s", ", ".join(failed))
        return EXIT_VERIFY
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = driver.run_benchmark(args.spec)
    report.write_bench_csv(rows, args.out)
    report.render_bench(rows, str(Path(args.out).with_suffix(".png")))
    log.info("wrote %s (+.png), %d runs", args.out, len(rows))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve,
            "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    _apply_config(args)
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except SmipError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
