"""Command-line front door.

One executable covers the whole toolchain: headless scenario runs,
live serving, log replay, ladder program checking and tracing, shield
geometry, and thermocouple frame codec helpers.

Exit codes are part of the contract: 0 success, 1 usage error (bad
flags or argument values), 2 failure of the thing being operated on
(missing or invalid scenario, ladder diagnostics, corrupt log,
safety-invariant violations during a run).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import re
import signal
import sys
from dataclasses import replace
from pathlib import Path

from .codec import TempFault, decode_max6675, encode_max6675, shield_dimensions
from .ladder import parse_ladder, run_trace, validate
from .scenario import Scenario, load_scenario
from .session import SimSession, frame_json
from .telemetry import EventLog, TelemetryServer, replay

LOG_DIR_ENV = "CYCLONESIM_LOG_DIR"


class _Failure(Exception):
    """Operational failure: message to stderr, exit 2."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# -- argument value parsers ---------------------------------------------------


def _duration_ms(text: str) -> int:
    m = re.fullmatch(r"(\d+)(ms|s|m)?", text)
    if not m:
        raise argparse.ArgumentTypeError(
            f"bad duration {text!r} (use e.g. 500ms, 120s, 2m)"
        )
    return int(m.group(1)) * {"ms": 1, "s": 1000, "m": 60_000}[m.group(2) or "ms"]


def _positive_mm(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("length must be positive")
    return value


def _word16(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value <= 0xFFFF:
        raise argparse.ArgumentTypeError(f"{text} is not a 16-bit word")
    return value


def _host_port(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad address {text!r} (use host:port)"
        ) from None


def _ladder_value(text: str) -> bool | float:
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad value {text!r} (true, false, or a number)"
        ) from None


def _assignment(text: str) -> tuple[int, str, bool | float]:
    """--set name=value (t=0) and --at t:name=value both land here."""
    t_ms = 0
    body = text
    m = re.fullmatch(r"(\d+):(.*)", text)
    if m:
        t_ms = int(m.group(1))
        body = m.group(2)
    name, eq, value = body.partition("=")
    if not eq or not name:
        raise argparse.ArgumentTypeError(f"bad assignment {text!r} (name=value)")
    return t_ms, name.strip(), _ladder_value(value.strip())


# -- shared loading -----------------------------------------------------------


def _load_scenario(args) -> Scenario:
    try:
        scenario = load_scenario(args.scenario)
    except OSError as exc:
        raise _Failure(f"cannot read scenario: {exc}") from None
    except ValueError as exc:
        raise _Failure(str(exc)) from None
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.dt_ms is not None:
        scenario = replace(
            scenario, controller=replace(scenario.controller, scan_dt_ms=args.dt_ms)
        )
    return scenario


def _log_path(args, scenario: Scenario) -> Path | None:
    if args.log is not None:
        return Path(args.log)
    log_dir = os.environ.get(LOG_DIR_ENV)
    if log_dir:
        directory = Path(log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        return directory / f"{scenario.name}.ndjson"
    return None


def _load_ladder(path: str):
    try:
        source = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Failure(f"cannot read ladder file: {exc}") from None
    result = parse_ladder(source)
    diagnostics = list(result.diagnostics)
    if result.program is not None:
        diagnostics.extend(validate(result.program))
    return result.program, diagnostics


# -- subcommands --------------------------------------------------------------


def _cmd_run(args) -> int:
    scenario = _load_scenario(args)
    session = SimSession(scenario, snapshot_hz=args.snapshot_hz)
    log_path = _log_path(args, scenario)
    log = EventLog(log_path) if log_path else None
    try:
        for result in session.run(args.duration):
            if result.frame is None:
                continue
            line = frame_json(result.frame)
            if log:
                log.append(line)
            if not args.quiet:
                print(line)
    finally:
        if log:
            log.close()
    if args.out:
        Path(args.out).write_text(session.report_json(), encoding="utf-8")
    violations = session.invariant_violations()
    print(
        f"scenario {scenario.name}: {session.cycles_completed} cycles,"
        f" {violations} violations, {len(session.alarm_events)} alarms",
        file=sys.stderr,
    )
    return 2 if violations else 0


def _cmd_serve(args) -> int:
    scenario = _load_scenario(args)
    session = SimSession(scenario, snapshot_hz=args.snapshot_hz)
    host, port = args.listen
    http_host = http_port = None
    if args.http is not None:
        http_host, http_port = args.http
    static = args.static or _default_static(http_port)
    server = TelemetryServer(
        session,
        host=host,
        port=port,
        http_port=http_port,
        http_host=http_host,
        static_dir=static,
        log_path=_log_path(args, scenario),
        time_scale=args.time_scale,
        duration_ms=args.duration,
        wait_clients=1 if args.wait_client else 0,
    )

    def announce():
        note = f"listening tcp={server.host}:{server.port}"
        if server.http_port is not None:
            note += f" http={server.http_host}:{server.http_port}"
        print(note, file=sys.stderr, flush=True)

    async def serve():
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, server.request_stop)
        await server.serve(on_started=announce)

    try:
        asyncio.run(serve())
    except KeyboardInterrupt:
        pass
    return 2 if session.invariant_violations() else 0


def _default_static(http_port) -> Path | None:
    if http_port is None:
        return None
    candidate = Path(__file__).resolve().parents[2] / "frontend/dist"
    return candidate if candidate.is_dir() else None


def _cmd_replay(args) -> int:
    try:
        lines = replay(args.log)
    except OSError as exc:
        raise _Failure(f"cannot read log: {exc}") from None
    except ValueError as exc:
        raise _Failure(str(exc)) from None
    for line in lines:
        print(line)
    print(f"replayed {len(lines)} frames", file=sys.stderr)
    return 0


def _cmd_ladder_check(args) -> int:
    _, diagnostics = _load_ladder(args.file)
    for diag in diagnostics:
        print(diag)
    print(f"{len(diagnostics)} diagnostics")
    return 0 if not diagnostics else 2


def _traced_images(args):
    program, diagnostics = _load_ladder(args.file)
    if diagnostics:
        for diag in diagnostics:
            print(diag, file=sys.stderr)
        raise _Failure(f"{len(diagnostics)} diagnostics")
    schedule = [*(args.set or []), *(args.at or [])]
    try:
        return program, run_trace(program, schedule, args.duration, args.dt_ms)
    except ValueError as exc:
        raise _Failure(str(exc)) from None


def _cmd_ladder_run(args) -> int:
    _, images = _traced_images(args)
    final = images[-1].values if images else {}
    print(json.dumps(final, separators=(",", ":")))
    return 0


def _cmd_ladder_trace(args) -> int:
    _, images = _traced_images(args)
    for tick, image in enumerate(images):
        line = {"t_ms": tick * args.dt_ms, "values": image.values}
        print(json.dumps(line, separators=(",", ":")))
    return 0


def _cmd_shield(args) -> int:
    geometry = shield_dimensions(args.electrode_mm)
    print(
        f"S={geometry.side_mm:.2f}"
        f" P={geometry.partition_mm:.2f}"
        f" M={geometry.mouth_mm:.2f}"
    )
    return 0


def _cmd_codec(args) -> int:
    if args.decode is not None:
        reading = decode_max6675(args.decode)
        if isinstance(reading, TempFault):
            print(f"FAULT {reading.value}")
        else:
            print(f"{reading:.2f}")
        return 0
    try:
        word = encode_max6675(args.encode)
    except ValueError as exc:
        print(f"codec: error: {exc}", file=sys.stderr)
        return 1
    print(f"0x{word:04X}")
    return 0


# -- parser wiring -------------------------------------------------------------


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="cyclonesim", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    sim_flags = _ArgumentParser(add_help=False)
    sim_flags.add_argument("--scenario", required=True, help="scenario TOML file")
    sim_flags.add_argument("--seed", type=int, help="override the scenario seed")
    sim_flags.add_argument("--dt-ms", type=int, help="override the scan period")
    sim_flags.add_argument(
        "--snapshot-hz", type=float, default=10.0, help="frame cadence (default 10)"
    )
    sim_flags.add_argument(
        "--duration", type=_duration_ms, default=None, help="e.g. 500ms, 120s, 2m"
    )
    sim_flags.add_argument("--log", help="event log path (default: $%s)" % LOG_DIR_ENV)

    run = subs.add_parser("run", parents=[sim_flags], help="run a scenario headlessly")
    run.add_argument("--out", help="write the run report as JSON")
    run.add_argument("--quiet", action="store_true", help="suppress frame output")
    run.set_defaults(func=_cmd_run)

    serve = subs.add_parser("serve", parents=[sim_flags], help="serve a live session")
    serve.add_argument(
        "--listen",
        type=_host_port,
        default=("127.0.0.1", 8777),
        help="TCP stream address (default 127.0.0.1:8777)",
    )
    serve.add_argument(
        "--http", type=_host_port, help="also serve the browser gateway here"
    )
    serve.add_argument("--static", help="static file root for the gateway")
    serve.add_argument(
        "--time-scale",
        type=float,
        default=1.0,
        help="wall seconds per simulated second (0 = free-running)",
    )
    serve.add_argument(
        "--wait-client", action="store_true", help="hold at t=0 for the first client"
    )
    serve.set_defaults(func=_cmd_serve)

    rep = subs.add_parser("replay", help="print the frame stream of an event log")
    rep.add_argument("log", help="event log file")
    rep.set_defaults(func=_cmd_replay)

    ladder = subs.add_parser("ladder", help="check or execute ladder programs")
    ladder_subs = ladder.add_subparsers(
        dest="ladder_command", required=True, parser_class=_ArgumentParser
    )
    check = ladder_subs.add_parser("check", help="parse and validate")
    check.add_argument("file")
    check.set_defaults(func=_cmd_ladder_check)

    exec_flags = _ArgumentParser(add_help=False)
    exec_flags.add_argument("file")
    exec_flags.add_argument(
        "--duration", type=_duration_ms, default=1000, help="e.g. 500ms, 2s"
    )
    exec_flags.add_argument("--dt-ms", type=int, default=100, help="scan period")
    exec_flags.add_argument(
        "--set",
        type=_assignment,
        action="append",
        metavar="NAME=VALUE",
        help="input applied at t=0 (repeatable)",
    )
    exec_flags.add_argument(
        "--at",
        type=_assignment,
        action="append",
        metavar="T_MS:NAME=VALUE",
        help="scheduled input write (repeatable)",
    )
    lrun = ladder_subs.add_parser(
        "run", parents=[exec_flags], help="scan and print the final image"
    )
    lrun.set_defaults(func=_cmd_ladder_run)
    ltrace = ladder_subs.add_parser(
        "trace", parents=[exec_flags], help="scan and print one line per tick"
    )
    ltrace.set_defaults(func=_cmd_ladder_trace)

    shield = subs.add_parser("shield-calc", help="level-probe shield dimensions")
    shield.add_argument("--electrode-mm", type=_positive_mm, required=True)
    shield.set_defaults(func=_cmd_shield)

    codec = subs.add_parser("codec", help="thermocouple frame encode/decode")
    group = codec.add_mutually_exclusive_group(required=True)
    group.add_argument("--decode", type=_word16, metavar="WORD")
    group.add_argument("--encode", type=float, metavar="TEMP_C")
    codec.set_defaults(func=_cmd_codec)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Failure as exc:
        print(f"cyclonesim: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0  # downstream pager closed early; not our failure


if __name__ == "__main__":
    sys.exit(main())
