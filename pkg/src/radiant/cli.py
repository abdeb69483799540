"""Command-line entry point: check, compile, run, eval.

Exit codes: 0 success, 1 domain error (validation, ingestion, metrics),
2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
from pathlib import Path

from radiant import __version__
from radiant.compiler import DetectorSpec, compile_process
from radiant.iot_config import ConfigError, IoTSystem, load_iot_config
from radiant.lang import has_errors, parse_radiant, validate
from radiant.siddhi import emit_query_text

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("radiant")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_config(path: str, strict_env: bool = False) -> IoTSystem:
    try:
        system = load_iot_config(path, strict_env=strict_env)
    except FileNotFoundError:
        raise CliError(f"{path}: no such file") from None
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from None
    except ConfigError as exc:
        for p, msg in exc.issues:
            _err(f"{path}: error: {p + ': ' if p else ''}{msg}")
        raise CliError(f"{path}: invalid configuration", EXIT_DOMAIN) from None
    for w in system.warnings:
        if "unresolved environment variable" in w:
            # Only live runs need broker urls; offline commands just note it.
            log.info("%s: %s", path, w)
        else:
            _err(f"{path}: warning: {w}")
    return system


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CliError(f"{path}: no such file") from None
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from None


def _checked_program(program: str, system: IoTSystem):
    """Parse and validate; print diagnostics; return (process, ok)."""
    proc, diags = parse_radiant(_read_text(program))
    if proc is not None and not has_errors(diags):
        diags = sorted(diags + validate(proc, system), key=lambda d: (d.span.line, d.span.column))
    for d in diags:
        _err(d.format(program))
    return proc, not has_errors(diags)


def cmd_check(args) -> int:
    system = _load_config(args.config)
    _, ok = _checked_program(args.program, system)
    return EXIT_OK if ok else EXIT_DOMAIN


def cmd_compile(args) -> int:
    system = _load_config(args.config)
    proc, ok = _checked_program(args.program, system)
    if not ok:
        _err("compilation aborted; no files written")
        return EXIT_DOMAIN
    specs = compile_process(proc, system)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for spec in specs:
            (out / spec.filename).write_text(spec.to_json(), encoding="utf-8")
            print(out / spec.filename)
            if args.emit_sql:
                sql = out / (spec.filename[: -len(".json")] + ".siddhi")
                sql.write_text(emit_query_text(spec, system), encoding="utf-8")
                print(sql)
    except OSError as exc:
        raise CliError(f"{out}: cannot write output ({exc.strerror})") from None
    return EXIT_OK


def _load_specs(program: str, system: IoTSystem) -> list[DetectorSpec]:
    """Compile a program, or load precompiled specs from a directory or file."""
    path = Path(program)
    if path.is_dir() or path.suffix == ".json":
        files = sorted(path.glob("*.json")) if path.is_dir() else [path]
        if not files:
            raise CliError(f"{program}: no detector specs found")
        try:
            return [DetectorSpec.from_json(f.read_text(encoding="utf-8")) for f in files]
        except (ValueError, KeyError) as exc:
            raise CliError(f"{program}: invalid detector spec ({exc})", EXIT_DOMAIN) from None
    proc, ok = _checked_program(program, system)
    if not ok:
        raise CliError(f"{program}: program has errors", EXIT_DOMAIN)
    return compile_process(proc, system)


def _parse_inputs(items: list[str]) -> dict[str, list[str]]:
    inputs: dict[str, list[str]] = {}
    for item in items:
        station, sep, path = item.partition("=")
        if not sep or not station or not path:
            raise CliError(f"--input expects STATION=PATH, got {item!r}")
        if not os.path.isfile(path):
            raise CliError(f"{path}: no such file")
        inputs.setdefault(station, []).append(path)
    return inputs


def cmd_run(args) -> int:
    from radiant.engine.ingest import IngestError, IngestStats
    from radiant.engine.mqtt import BrokerUnavailable
    from radiant.engine.runner import (
        JsonlSink,
        RunError,
        XesSink,
        live_timeline,
        replay_timeline,
        run,
        sinks_from_config,
        write_summary,
    )

    live = args.mode == "live"
    system = _load_config(args.config, strict_env=live and not args.broker)
    specs = _load_specs(args.program, system)
    for spec in specs:
        for station in spec.stations:
            if system.station(station) is None:
                raise CliError(f"detector {spec.activity} needs station {station}, absent from the config", EXIT_DOMAIN)
    stats = IngestStats()
    ingest = None

    if live:
        if args.input:
            raise CliError("--input is for replay mode")
        stations = sorted({s for spec in specs for s in spec.stations})
        try:
            ingest, timeline = live_timeline(
                system,
                stations,
                stats,
                broker=args.broker,
                connect_deadline=args.connect_timeout,
                idle_timeout=args.idle_timeout,
                max_events=args.max_events,
                order_policy=args.order_policy,
            )
        except (BrokerUnavailable, RunError) as exc:
            raise CliError(str(exc)) from None
    else:
        inputs = _parse_inputs(args.input or [])
        for st in system.stations:
            source = system.source(st.source)
            if st.id not in inputs and source is not None and source.type == "file" and source.path:
                inputs[st.id] = [source.path]
        if not inputs:
            raise CliError("replay mode needs at least one --input STATION=PATH")
        try:
            timeline = replay_timeline(system, inputs, stats, speed=args.speed, order_policy=args.order_policy)
        except RunError as exc:
            raise CliError(str(exc), EXIT_DOMAIN) from None
        if args.max_events is not None:
            timeline = _take(timeline, args.max_events)

    try:
        sinks = [] if args.no_config_sinks else sinks_from_config(system.sinks)
        if args.out:
            sinks.append(JsonlSink(args.out))
        if args.patterns:
            sinks.append(JsonlSink(args.patterns, patterns=True))
        if args.xes:
            sinks.append(XesSink(args.xes))
    except OSError as exc:
        if ingest is not None:
            ingest.close()
        raise CliError(f"cannot open sink: {exc}") from None

    previous = {}
    if ingest is not None:
        # An interrupt ends the live stream; the run then finishes normally
        # and every sink is flushed.
        def stop(signum, frame):
            log.info("signal %d received; shutting down", signum)
            ingest.stop()

        for sig in (signal.SIGINT, signal.SIGTERM):
            previous[sig] = signal.signal(sig, stop)
    try:
        summary = run(specs, timeline, sinks, stats)
    except RunError as exc:
        raise CliError(str(exc)) from None
    except IngestError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    except FileNotFoundError as exc:
        raise CliError(f"{exc.filename}: no such file") from None
    finally:
        for sig, handler in previous.items():
            signal.signal(sig, handler)
        if ingest is not None:
            ingest.close()
    write_summary(summary)
    return EXIT_OK


def _take(events, n):
    for i, ev in enumerate(events):
        if i >= n:
            return
        yield ev


def cmd_eval(args) -> int:
    from radiant.evalkit import LogError, OverlapError, evaluate, load_intervals, render_table, report_csv

    logs = []
    for path in (args.detections, args.ground_truth):
        try:
            logs.append(load_intervals(path))
        except FileNotFoundError:
            raise CliError(f"{path}: no such file") from None
        except OverlapError as exc:
            raise CliError(str(exc), EXIT_DOMAIN) from None
        except LogError as exc:
            raise CliError(str(exc), EXIT_DOMAIN) from None
    det, gt = logs
    try:
        report = evaluate(gt, det, frame_ms=args.frame_ms, mode=args.mode, max_lag_ms=args.max_lag_ms)
    except LogError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    for w in report.warnings:
        _err(f"warning: {w}")
    try:
        if args.report:
            Path(args.report).write_text(report.to_json(), encoding="utf-8")
        if args.csv:
            Path(args.csv).write_text(report_csv(report), encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write report: {exc.strerror}") from None
    if args.pretty:
        sys.stdout.write(render_table(report))
    else:
        data = report.to_dict()
        headline = {"aggregation": data["aggregation"], **data["overall"]}
        headline.pop("frame_counts_ms", None)
        headline.pop("event_counts", None)
        print(json.dumps(headline, indent=2))
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radiant", description="Sensor-level activity detection toolchain.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a program against a configuration")
    p.add_argument("program")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compile", help="compile a program into one detector spec per activity")
    p.add_argument("program")
    p.add_argument("config")
    p.add_argument("--out", "-o", required=True, help="output directory (created if absent)")
    p.add_argument("--emit-sql", action="store_true", help="also write reference query text per activity")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="detect activities in recorded or live sensor streams")
    p.add_argument("program", help="program file, or a spec file or directory produced by compile")
    p.add_argument("config")
    p.add_argument("--mode", choices=("replay", "live"), default="replay")
    p.add_argument("--input", "-i", action="append", metavar="STATION=PATH", help="replay file (repeatable)")
    p.add_argument("--out", "-o", help="detections as JSON lines")
    p.add_argument("--xes", help="detections as an XES event log")
    p.add_argument("--patterns", help="pattern events as JSON lines (debugging)")
    p.add_argument("--speed", type=_positive_float, help="replay at this multiple of real time")
    p.add_argument("--order-policy", choices=("drop", "abort"), default="drop")
    p.add_argument("--broker", help="broker url overriding the configured source urls")
    p.add_argument("--connect-timeout", type=_positive_float, default=10.0, help="seconds")
    p.add_argument("--idle-timeout", type=_positive_float, help="end a live run after this many idle seconds")
    p.add_argument("--max-events", type=_positive_int, help="stop after this many events")
    p.add_argument("--no-config-sinks", action="store_true", help="ignore sinks declared in the config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("detections")
    p.add_argument("ground_truth")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--csv", help="per-activity CSV path")
    p.add_argument("--frame-ms", type=_positive_int, default=100, help="cross-correlation frame (default 100)")
    p.add_argument("--max-lag-ms", type=int, help="limit the cross-correlation lag search")
    p.add_argument("--mode", choices=("micro", "macro"), default="micro")
    p.add_argument("--pretty", action="store_true", help="print a table instead of JSON")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        _err(f"radiant: {exc}")
        return exc.code
    except KeyboardInterrupt:
        _err("radiant: interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
