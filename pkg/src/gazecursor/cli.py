"""Command line entry points.

Subcommands: run (process a frame directory against a landmark trace),
synth (render a scripted scene to frames plus a landmark trace), replay
(print a recorded event trace), bench (throughput measurement).

Exit codes: 0 success, 1 usage error, 2 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

from .config import EngineConfig, parse_config_text, set_value
from .engine import bench, iter_pgm_dir, load_pgm_dir, run
from .errors import GazeCursorError
from .events import EventKind, TraceRecorder, replay_trace
from .imaging import write_pgm
from .landmarks import LandmarkProvider, load_landmark_trace, write_landmark_trace
from .synth import load_script, render_trace
from .telemetry import TelemetryServer

LANDMARK_FILE = "landmarks.jsonl"


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazecursor", description="gaze-driven cursor event engine"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="process frames into cursor events")
    p_run.add_argument("--frames", required=True, help="directory of PGM frames")
    p_run.add_argument("--landmarks", required=True, help="landmark trace (JSONL)")
    p_run.add_argument("--config", help="key = value config file")
    p_run.add_argument("--out-trace", help="write the event trace here (JSONL)")
    p_run.add_argument("--serve", type=int, metavar="PORT", help="serve telemetry on this port")
    p_run.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override one config value (repeatable)",
    )

    p_synth = sub.add_parser("synth", help="render a scripted synthetic scene")
    p_synth.add_argument("--script", required=True, help="scene script (JSON)")
    p_synth.add_argument("--out", required=True, help="output directory")

    p_replay = sub.add_parser("replay", help="print a recorded event trace")
    p_replay.add_argument("--trace", required=True, help="event trace file (JSONL)")

    p_bench = sub.add_parser("bench", help="measure pipeline throughput")
    p_bench.add_argument("--frames", required=True, help="directory of PGM frames")
    p_bench.add_argument("--landmarks", required=True, help="landmark trace (JSONL)")
    p_bench.add_argument("--repeat", type=int, default=3, help="passes over the frames")
    p_bench.add_argument("--config", help="key = value config file")
    p_bench.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override one config value (repeatable)",
    )
    return parser


def _load_config(args) -> EngineConfig:
    cfg = EngineConfig()
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config_text(fh.read(), base=cfg)
    for pair in getattr(args, "set", []):
        key, eq, value = pair.partition("=")
        if not eq or not key.strip():
            raise UsageError(f"--set expects KEY=VALUE, got {pair!r}")
        cfg = set_value(cfg, key.strip(), value.strip())
    return cfg


def _frames_dir(path: str) -> str:
    if not os.path.isdir(path):
        raise FileNotFoundError(f"frame directory not found: {path}")
    return path


def _provider(path: str) -> LandmarkProvider:
    return load_landmark_trace(path)


def cmd_run(args) -> int:
    cfg = _load_config(args)
    frames = iter_pgm_dir(_frames_dir(args.frames))
    provider = _provider(args.landmarks)
    port = args.serve if args.serve is not None else cfg.telemetry_port
    telemetry = TelemetryServer(port) if port is not None else None
    sinks = []
    recorder = None
    if args.out_trace:
        recorder = TraceRecorder(args.out_trace)
        sinks.append(recorder)
    try:
        run(cfg, frames, provider, sinks=sinks, telemetry=telemetry, out=sys.stdout)
    finally:
        if recorder is not None:
            recorder.close()
        if telemetry is not None:
            telemetry.close()
    return 0


def cmd_synth(args) -> int:
    with open(args.script, "r", encoding="utf-8") as fh:
        script = load_script(fh.read())
    os.makedirs(args.out, exist_ok=True)
    sets = []
    for index, (img, truth) in enumerate(render_trace(script)):
        write_pgm(img, os.path.join(args.out, f"frame_{index:06d}.pgm"))
        sets.append(truth.landmarks)
    write_landmark_trace(os.path.join(args.out, LANDMARK_FILE), sets)
    print(f"wrote {len(sets)} frames and {LANDMARK_FILE} to {args.out}")
    return 0


def cmd_replay(args) -> int:
    events = replay_trace(args.trace)
    moves = clicks = 0
    for event in events:
        if event.kind is EventKind.MOVE_BY:
            moves += 1
            print(f"{event.frame_index:6d}  move_by  dx={event.dx:+d} dy={event.dy:+d}")
        else:
            clicks += 1
            print(f"{event.frame_index:6d}  {event.kind.value}")
    print(f"{len(events)} events ({moves} moves, {clicks} clicks)")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    frames = load_pgm_dir(_frames_dir(args.frames))
    provider = _provider(args.landmarks)
    result = bench(cfg, frames, provider, repeat=args.repeat)
    print(f"frames: {result.frames}")
    print(f"elapsed: {result.elapsed_seconds:.3f} s")
    print(f"fps: {result.fps:.1f}")
    print(f"mean latency: {result.mean_micros:.0f} us")
    print(f"p99 latency: {result.p99_micros:.0f} us")
    return 0


_COMMANDS = {"run": cmd_run, "synth": cmd_synth, "replay": cmd_replay, "bench": cmd_bench}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 for --help; fold the former
        # into this tool's usage code.
        return 0 if exc.code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, GazeCursorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
