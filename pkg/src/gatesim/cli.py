"""Simulation runner: load topology + config, elaborate, run, write outputs.

Exit codes:
  0  success
  2  command-line, file, parse, or configuration error
  3  elaboration error (including module initialize() failures)
  4  guest-runtime, guest-class, or registration failure
  5  callback failure mid-run, or an output write error

Overrides follow CLI flag > named section > [General]. All configuration
is explicit: no environment variables are consulted.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .bridge import Bridge, RuntimeConfig
from .config import EffectiveConfig, parse_config
from .elaboration import elaborate
from .errors import (
    BridgeError,
    CallbackFailure,
    ConfigError,
    ElaborationError,
    ParseError,
    SimulationError,
    TimeParseError,
)
from .kernel import Kernel, RunReport, StopReason
from .simtime import SimTime, ZERO
from .stdmodels import default_registry, stdmodels_ast
from .topology import merge, parse_topology


def _build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gatesim",
        description="Run a discrete-event network simulation.")
    parser.add_argument("--topology", action="append", default=[],
                        metavar="FILE", help="topology file (repeatable)")
    parser.add_argument("--config", required=True, metavar="FILE",
                        help="ini run configuration")
    parser.add_argument("--section", default="General",
                        help="configuration section (default General)")
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed, overrides config")
    parser.add_argument("--time-limit", default=None, metavar="TIME",
                        help="simulated time limit, e.g. 10s (inclusive)")
    parser.add_argument("--event-limit", type=int, default=None,
                        metavar="N", help="maximum number of events")
    parser.add_argument("--log", default=None, metavar="PATH",
                        help="event log file, or - for stdout")
    parser.add_argument("--scalars", default=None, metavar="PATH",
                        help="scalar results file")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress informational output")
    return parser


def write_outputs(kernel: Optional[Kernel], report: RunReport,
                  log_path: Optional[str], scalars_path: Optional[str]):
    """Flush the event log (dispatch order) and scalars (path-sorted)."""
    if log_path is not None:
        lines = [r.format_line() for r in kernel.events] if kernel else []
        lines.append(f"# run: events={report.events_executed} "
                     f"time={report.final_time.to_decimal()} "
                     f"reason={report.stop_reason.value}")
        text = "\n".join(lines) + "\n"
        if log_path == "-":
            sys.stdout.write(text)
        else:
            with open(log_path, "w", encoding="utf-8") as fh:
                fh.write(text)
    if scalars_path is not None and kernel is not None:
        rows = sorted(kernel.scalars, key=lambda row: row[0])
        with open(scalars_path, "w", encoding="utf-8") as fh:
            for path, name, value in rows:
                fh.write(f"{path}\t{name}\t{value!r}\n")


def _fail(code: int, message: str, args, kernel=None,
          report: Optional[RunReport] = None) -> int:
    print(f"gatesim: {message}", file=sys.stderr)
    if report is None:
        final = kernel.now() if kernel else ZERO
        events = len(kernel.events) if kernel else 0
        report = RunReport(events, final, StopReason.ERROR, message)
    try:
        write_outputs(kernel, report, args.log, args.scalars)
    except OSError:
        pass
    return code


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_arg_parser()
    args = parser.parse_args(argv)

    # Phase 1: read and parse inputs.
    try:
        asts = [stdmodels_ast()]
        for path in args.topology:
            with open(path, encoding="utf-8") as fh:
                asts.append(parse_topology(fh.read()))
        ast = merge(asts)
        with open(args.config, encoding="utf-8") as fh:
            config = parse_config(fh.read())
        eff = config.effective(args.section)
        time_limit = (SimTime.parse(args.time_limit)
                      if args.time_limit is not None else eff.time_limit)
        event_limit = (args.event_limit if args.event_limit is not None
                       else eff.event_limit)
        seed = args.seed if args.seed is not None else eff.seed
        if not eff.network:
            raise ConfigError(
                f"section [{args.section}] does not set 'network'")
    except (ParseError, ConfigError, TimeParseError, OSError) as exc:
        return _fail(2, str(exc), args)

    # Phase 2: elaborate the module tree; create guest peers if any.
    kernel = None
    try:
        network = elaborate(ast, eff, default_registry(), seed=seed)
        kernel = network.kernel
    except BridgeError as exc:
        return _fail(4, str(exc), args)
    except (ElaborationError, SimulationError) as exc:
        return _fail(3, str(exc), args)

    bridge = None
    try:
        if network.guest_requests:
            bridge = Bridge(kernel, RuntimeConfig(
                runtime_path=eff.guest_runtime_path,
                module_paths=eff.guest_module_path,
                check=eff.guest_sdk_check))
            network.instantiate_guests(bridge)

        # Phase 3: initialize callbacks (still before the first event).
        try:
            kernel.initialize()
        except CallbackFailure as exc:
            if isinstance(exc.cause, BridgeError):
                return _fail(4, str(exc), args, kernel)
            return _fail(3, str(exc), args, kernel)

        # Phase 4: the event loop.
        try:
            report = kernel.run(time_limit=time_limit,
                                event_limit=event_limit)
        except CallbackFailure as exc:
            return _fail(5, str(exc), args, kernel, exc.report)
    except BridgeError as exc:
        return _fail(4, str(exc), args, kernel)
    finally:
        if bridge is not None:
            bridge.teardown()

    # Phase 5: outputs.
    try:
        write_outputs(kernel, report, args.log, args.scalars)
    except OSError as exc:
        print(f"gatesim: cannot write outputs: {exc}", file=sys.stderr)
        return 5
    if not args.quiet:
        print(f"gatesim: events={report.events_executed} "
              f"time={report.final_time.to_decimal()} "
              f"reason={report.stop_reason.value}", file=sys.stderr)
    return 0


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
