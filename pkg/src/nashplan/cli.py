"""Command line: ``nashplan run | bench | validate``.

Exit codes: 0 success, 1 scenario validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .bench import format_table, run_bench
from .scenario_file import ScenarioError, load_scenario
from .sim import PLANNERS, simulate
from .trace import atomic_write, write_trace

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2

log = logging.getLogger("nashplan")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nashplan", description="Nash-equilibrium motion planning simulator")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario JSON path or bundled name (e.g. intersection)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="dotted-path override, value parsed as JSON; repeatable")

    p = sub.add_parser("run", help="simulate one scenario and write trace.csv + summary.json")
    common(p)
    p.add_argument("--output", default="out", help="output directory (default: out)")
    p.add_argument("--planner", choices=PLANNERS, help="override sim.planner")
    p.add_argument("--mask-timing", action="store_true", help="write solver_ms as 0 so traces are byte-reproducible")

    p = sub.add_parser("bench", help="compare planners over randomized trials")
    common(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--planner", action="append", choices=PLANNERS, help="planner to include; repeatable (default: all)")
    p.add_argument("--seed", type=int, help="master seed for the trials (default: sim.seed)")
    p.add_argument("--output", help="directory for bench.json and bench.txt")

    p = sub.add_parser("validate", help="check a scenario file and report every problem")
    common(p)
    return ap


def _load(args):
    loaded = load_scenario(args.scenario, args.override)
    for w in loaded.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return loaded


def _cmd_run(args) -> int:
    sc = _load(args).scenario
    if args.planner:
        sc = replace(sc, planner=args.planner)
    result = simulate(sc)
    csv_path, json_path = write_trace(args.output, sc, result, args.mask_timing)
    print(f"wrote {csv_path} and {json_path}")
    if result.error:
        print(f"error: simulation aborted: {result.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    sc = _load(args).scenario
    planners = args.planner or list(PLANNERS)
    report = run_bench(sc, args.trials, planners, args.seed)
    text = format_table(report)
    sys.stdout.write(text)
    if args.output:
        out = Path(args.output)
        atomic_write(out / "bench.json", json.dumps(report, indent=2) + "\n")
        atomic_write(out / "bench.txt", text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    loaded = _load(args)
    print(f"{args.scenario}: ok ({len(loaded.scenario.agents)} agents, planner {loaded.scenario.planner})")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "bench": _cmd_bench, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except ScenarioError as exc:
        for w in exc.warnings:
            print(f"warning: {w}", file=sys.stderr)
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
