"""Command-line interface: ``engagesim run|analyze|render|validate``.

Exit codes: 0 success, 1 validation failure, 2 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from typing import Optional, Sequence

from . import __version__
from .analysis import analyze, to_json, to_text
from .engine import SimulationError, iter_run
from .model import WorldValidationError
from .render import render_snapshot
from .scenario import ScenarioError, load_scenario
from .trace import TraceError, TraceWriter, make_header, read_trace

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


def _err(msg: str) -> None:
    print(f"engagesim: {msg}", file=sys.stderr)


def _load(path: str, seed: Optional[int] = None):
    try:
        return load_scenario(path, seed), EXIT_OK
    except WorldValidationError as exc:
        _err("invalid world:")
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return None, EXIT_INVALID
    except ScenarioError as exc:
        _err(f"{path}: {exc}")
        return None, exc.exit_code


def cmd_validate(args) -> int:
    scenario, code = _load(args.scenario)
    if scenario is None:
        return code
    print(f"{scenario.name}: ok ({len(scenario.world.entities)} entities)")
    return EXIT_OK


def cmd_run(args) -> int:
    scenario, code = _load(args.scenario, args.seed)
    if scenario is None:
        return code
    ticks = scenario.ticks if args.ticks is None else args.ticks
    out = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    count = 0
    try:
        writer = TraceWriter(out, make_header(scenario))
        for rec in iter_run(
            scenario.world, ticks, scenario.params, scenario.model, scenario.script, scenario.stop
        ):
            writer.write(rec)
            count += 1
    except SimulationError as exc:
        _err(str(exc))
        return EXIT_INVALID
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    finally:
        if out is not sys.stdout:
            out.close()
    if args.out:
        print(f"{scenario.name}: wrote {count} ticks to {args.out}")
    return EXIT_OK


def _read(path: str):
    try:
        return read_trace(path), EXIT_OK
    except OSError as exc:
        _err(f"{path}: {exc.strerror or exc}")
    except TraceError as exc:
        _err(f"{path}: {exc}")
    return None, EXIT_IO


def cmd_analyze(args) -> int:
    trace, code = _read(args.trace)
    if trace is None:
        return code
    expected = None
    if args.scenario:
        scenario, code = _load(args.scenario, trace.header.get("seed"))
        if scenario is None:
            return code
        expected = scenario.hash
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = analyze(trace.records, trace.header, expected)
    for w in caught:
        _err(f"warning: {w.message}")
    if args.format == "text":
        sys.stdout.write(to_text(report, trace.header.get("names")))
    else:
        sys.stdout.write(to_json(report))
    return EXIT_OK


def cmd_render(args) -> int:
    trace, code = _read(args.trace)
    if trace is None:
        return code
    rec = next((r for r in trace.records if r.tick == args.tick), None)
    if rec is None:
        _err(f"{args.trace}: no record for tick {args.tick}")
        return EXIT_INVALID
    try:
        render_snapshot(rec, args.out, trace.header.get("names"))
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    print(f"tick {args.tick}: wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="engagesim", description="Engagement simulation tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario and write a trace")
    r.add_argument("scenario", help="scenario file or bundled scenario name")
    r.add_argument("--ticks", type=int, help="tick limit (default: the scenario's)")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.add_argument("--out", help="trace file (default: standard output)")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="summarize a trace")
    a.add_argument("trace")
    a.add_argument(
        "--format", choices=("text", "json", "machine-readable"), default="text",
        help="machine-readable is an alias for json",
    )
    a.add_argument("--scenario", help="warn if the trace was not produced from this scenario")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("render", help="draw one tick of a trace as SVG")
    d.add_argument("trace")
    d.add_argument("--tick", type=int, required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_render)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    if args.command == "run" and args.ticks is not None and args.ticks < 0:
        _err("--ticks must be >= 0")
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
