#!/usr/bin/env python3
"""
CLI entrypoint for graphflow.

Usage:
  python graphflow.py run <config> [--out DIR] [--seed N] [--threads K]
  python graphflow.py paper-check [--out DIR] [--seed N] [--threads K] [--only 1,4,6]
  python graphflow.py plot <csv> <x:y1,y2> [--out FILE]
  python graphflow.py scenarios

Exit status: 0 every assertion passed, 1 an assertion failed, 2 error.
Errors are reported on stderr as one JSON line.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import List, Optional

import orjson

from app.battery import RUNTIME_BUDGET, run_battery
from app.config import parse_config
from app.runner import run_command
from core.errors import FlowError
from core.exact_solutions import SCENARIOS, format_scenario
from gen.svg.writer import PlotSpec, emit_plot
from utils.logging_config import configure_logging, log_level

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


def error_line(exc: BaseException) -> bytes:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, FlowError):
        payload.update(exc.details())
    return orjson.dumps(payload, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)


def _criteria(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"criteria must be comma separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphflow", description="Graphical H^rho flow runs and checks")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="random seed (lambda sampling)")
        p.add_argument("--threads", type=int, default=None, help="worker threads for diagnostics")

    p_run = sub.add_parser("run", help="run one configured flow and its diagnostics")
    p_run.add_argument("config", type=Path)
    common(p_run)

    p_check = sub.add_parser("paper-check", help="run the acceptance battery")
    common(p_check)
    p_check.add_argument("--only", type=_criteria, default=None, help="criterion numbers, e.g. 1,4,6")

    p_plot = sub.add_parser("plot", help="render CSV columns as an SVG line plot")
    p_plot.add_argument("csv", type=Path)
    p_plot.add_argument("spec", help="x:y1,y2")
    p_plot.add_argument("--out", type=Path, default=None, help="SVG path (default: next to the CSV)")

    sub.add_parser("scenarios", help="list the built-in initial data")
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config.read_text(encoding="utf-8"))
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    outcome = run_command(cfg, args.out)
    for path in outcome.files:
        print(path)
    return outcome.exit_code


def cmd_paper_check(args: argparse.Namespace) -> int:
    outcome = run_battery(
        args.out or Path("paper_check"),
        seed=0 if args.seed is None else args.seed,
        threads=1 if args.threads is None else args.threads,
        only=args.only,
    )
    for res in outcome.results:
        print(f"{res.number}. {res.name}: {'PASS' if res.passed else 'FAIL'}")
    over = "" if outcome.within_budget else ", over budget"
    print(f"runtime: {outcome.elapsed:.1f}s (budget {RUNTIME_BUDGET:.0f}s{over})")
    return outcome.exit_code


def cmd_plot(args: argparse.Namespace) -> int:
    spec = PlotSpec.parse(args.spec)
    out = args.out or args.csv.with_suffix(".svg")
    print(emit_plot(args.csv, spec, out))
    return EXIT_OK


def cmd_scenarios(args: argparse.Namespace) -> int:
    for info in SCENARIOS.values():
        print(f"{format_scenario(info.name, info.defaults):<28} {info.description}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "paper-check": cmd_paper_check,
    "plot": cmd_plot,
    "scenarios": cmd_scenarios,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR

    configure_logging(log_level(args.verbose))
    if getattr(args, "threads", None) is not None and args.threads < 1:
        sys.stderr.buffer.write(error_line(ValueError("--threads must be >= 1")) + b"\n")
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (FlowError, ValueError, OSError) as e:
        logger.debug("Command failed", exc_info=True)
        sys.stderr.buffer.write(error_line(e) + b"\n")
        sys.stderr.flush()
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
