"""Per-frame pipeline orchestration: frames and landmarks in, cursor events out.

process_frame is a pure function of (frame, landmarks, state, config), so
the same inputs always yield the same event trace; run() is the loop that
threads state through a frame source and fans events out to sinks.
"""

from __future__ import annotations

import base64
import math
import os
import time
from dataclasses import dataclass, replace
from typing import Any, Iterable, Iterator, Protocol, Sequence, TextIO

from .blink import BlinkPhase, BlinkState, EarSample, ear_sample, update_blink
from .config import ControlOp, Detector, EngineConfig, apply_control, parse_control
from .errors import ConfigError, GazeCursorError, InvalidParameterError
from .events import CursorEvent, EventKind, EventSink, EventState, synthesize
from .gaze import Direction, GazeRatios, classify_direction, gaze_ratios
from .imaging import Centroid, GrayImage, encode_pgm, read_pgm
from .landmarks import (
    EyeLandmarks,
    EyeRegion,
    LandmarkProvider,
    LandmarkSet,
    Side,
    crop,
    eye_landmarks,
    eye_region,
)
from .pupil import (
    KalmanState,
    PupilDetection,
    detect_pupil_hough,
    detect_pupil_threshold,
    init_kalman,
    kalman_predict_update,
)

__all__ = [
    "EngineState",
    "FrameReport",
    "RunSummary",
    "BenchResult",
    "process_frame",
    "run",
    "bench",
    "iter_pgm_dir",
    "load_pgm_dir",
]

_THUMB_MAX_SIDE = 48


@dataclass(frozen=True)
class EngineState:
    """Everything that carries across frames."""

    blink: BlinkState = BlinkState()
    events: EventState = EventState()
    kalman_left: KalmanState | None = None
    kalman_right: KalmanState | None = None
    last_frame: int = -1


@dataclass(frozen=True)
class FrameReport:
    """One frame's full observable outcome, independent of any consumer."""

    frame_index: int
    direction: Direction
    events: tuple[CursorEvent, ...]
    ear: EarSample | None = None
    pupil: dict[Side, PupilDetection | None] | None = None
    ratios: GazeRatios | None = None
    processing_micros: int = 0
    thumbnail: str | None = None
    diagnostics: tuple[str, ...] = ()

    def to_wire(self) -> dict[str, Any]:
        """The telemetry JSON object for this frame."""
        pupil: dict[str, Any] = {}
        for side in (Side.LEFT, Side.RIGHT):
            det = (self.pupil or {}).get(side)
            pupil[side.value] = None if det is None else {
                "x": det.center.cx,
                "y": det.center.cy,
                "area": det.area,
                "method": det.method.value,
            }
        obj: dict[str, Any] = {
            "type": "report",
            "frame": self.frame_index,
            "direction": self.direction.value,
            "ear": None if self.ear is None else {
                "left": self.ear.left, "right": self.ear.right, "mean": self.ear.mean,
            },
            "pupil": pupil,
            "ratios": None if self.ratios is None else {"h": self.ratios.h, "v": self.ratios.v},
            "events": [_event_obj(e) for e in self.events],
            "processing_micros": self.processing_micros,
            "diagnostics": list(self.diagnostics),
        }
        if self.thumbnail is not None:
            obj["thumbnail"] = self.thumbnail
        return obj


def _event_obj(event: CursorEvent) -> dict[str, Any]:
    obj: dict[str, Any] = {"frame": event.frame_index, "kind": event.kind.value}
    if event.kind is EventKind.MOVE_BY:
        obj["dx"], obj["dy"] = event.dx, event.dy
    return obj


def _smoothed(
    det: PupilDetection | None, ks: KalmanState | None
) -> tuple[PupilDetection | None, KalmanState | None]:
    """Run the tracker over one detection; a miss resets it so stale
    velocity never leaks across a dropout."""
    if det is None:
        return None, None
    if ks is None:
        ks = init_kalman(det.center.cx, det.center.cy)
    else:
        ks = kalman_predict_update(ks, det.center)
    cx, cy = ks.position
    return replace(det, center=Centroid(cx=cx, cy=cy)), ks


def _thumbnail(img: GrayImage) -> str:
    """Downscale to fit a small box and base64 the PGM bytes."""
    step = max(1, math.ceil(max(img.width, img.height) / _THUMB_MAX_SIDE))
    small = GrayImage(img.pixels[::step, ::step].copy())
    return base64.b64encode(encode_pgm(small)).decode("ascii")


def process_frame(
    frame: GrayImage,
    landmarks: LandmarkSet | None,
    state: EngineState,
    cfg: EngineConfig,
    snapshot: bool = False,
) -> tuple[EngineState, FrameReport]:
    """Advance the whole pipeline by one frame.

    Stage order: landmarks, blink, crop, pupil, optional smoothing, gaze,
    events.  Absent landmarks short-circuit to INVALID (which still feeds
    the event machine, so dwell holds behave correctly).  Stage failures
    land in the report's diagnostics instead of aborting the stream.
    """
    start = time.perf_counter_ns()
    frame_index = state.last_frame + 1
    diags: list[str] = []

    ear: EarSample | None = None
    blink_state = state.blink
    blink_event = None
    eyes: dict[Side, EyeLandmarks] = {}
    regions: dict[Side, EyeRegion | None] = {Side.LEFT: None, Side.RIGHT: None}
    detections: dict[Side, PupilDetection | None] = {Side.LEFT: None, Side.RIGHT: None}
    crops: dict[Side, GrayImage] = {}
    kalman = {Side.LEFT: state.kalman_left, Side.RIGHT: state.kalman_right}
    ratios: GazeRatios | None = None

    if landmarks is not None:
        try:
            ear = ear_sample(landmarks, frame_index)
        except GazeCursorError as exc:
            diags.append(f"ear: {exc}")
        if ear is not None:
            blink_state, blink_event = update_blink(state.blink, ear, cfg.blink)

        for side in (Side.LEFT, Side.RIGHT):
            det: PupilDetection | None = None
            try:
                eye = eye_landmarks(landmarks, side)
                eyes[side] = eye
                region = eye_region(eye, cfg.eye_margin, frame.width, frame.height)
                regions[side] = region
                crops[side] = crop(frame, region)
                if cfg.detector is Detector.HOUGH:
                    det = detect_pupil_hough(crops[side], cfg.hough)
                else:
                    det = detect_pupil_threshold(crops[side], cfg.pupil)
            except GazeCursorError as exc:
                diags.append(f"{side.value} pupil: {exc}")
            if cfg.smoothing_enabled:
                det, kalman[side] = _smoothed(det, kalman[side])
            else:
                kalman[side] = None
            detections[side] = det

        if eyes:
            try:
                ratios = gaze_ratios(
                    {side: detections[side] for side in eyes}, eyes, regions, frame_index
                )
            except GazeCursorError as exc:
                diags.append(f"gaze: {exc}")
    else:
        kalman = {Side.LEFT: None, Side.RIGHT: None}

    closed = ear is not None and blink_state.phase is BlinkPhase.CLOSED
    direction = classify_direction(ratios, closed, cfg.gaze)
    events_state, events = synthesize(
        state.events, direction, blink_event, frame_index, cfg.events
    )

    thumbnail = None
    if snapshot:
        source = crops.get(Side.LEFT) or crops.get(Side.RIGHT)
        thumbnail = _thumbnail(source if source is not None else frame)

    report = FrameReport(
        frame_index=frame_index,
        direction=direction,
        events=tuple(events),
        ear=ear,
        pupil=dict(detections),
        ratios=ratios,
        processing_micros=(time.perf_counter_ns() - start) // 1000,
        thumbnail=thumbnail,
        diagnostics=tuple(diags),
    )
    new_state = EngineState(
        blink=blink_state,
        events=events_state,
        kalman_left=kalman[Side.LEFT],
        kalman_right=kalman[Side.RIGHT],
        last_frame=frame_index,
    )
    return new_state, report


class TelemetryLike(Protocol):
    """What run() needs from a telemetry server; kept as a protocol so the
    engine never imports the network layer."""

    def drain_controls(self) -> list[tuple[int, dict]]: ...

    def reply(self, client_id: int, obj: dict) -> None: ...

    def broadcast(self, obj: dict) -> None: ...


@dataclass(frozen=True)
class RunSummary:
    frames: int
    events: int
    mean_fps: float
    elapsed_seconds: float


def _handle_controls(
    cfg: EngineConfig, telemetry: TelemetryLike, snapshot: bool
) -> tuple[EngineConfig, bool]:
    """Drain queued control messages; applied here, between frames, only."""
    for client_id, obj in telemetry.drain_controls():
        try:
            msg = parse_control(obj)
        except ConfigError as exc:
            telemetry.reply(client_id, {"type": "err", "key": None, "detail": str(exc)})
            continue
        if msg.op is ControlOp.SNAPSHOT_ON or msg.op is ControlOp.SNAPSHOT_OFF:
            snapshot = msg.op is ControlOp.SNAPSHOT_ON
            telemetry.reply(
                client_id,
                {"type": "ack", "key": "snapshot", "detail": "on" if snapshot else "off"},
            )
            continue
        cfg, reply = apply_control(cfg, msg)
        telemetry.reply(client_id, reply)
    return cfg, snapshot


def run(
    cfg: EngineConfig,
    frames: Iterable[GrayImage],
    provider: LandmarkProvider,
    sinks: Sequence[EventSink] = (),
    telemetry: TelemetryLike | None = None,
    snapshot: bool = False,
    out: TextIO | None = None,
) -> RunSummary:
    """Process a frame stream to exhaustion and report what happened."""
    state = EngineState()
    n_events = 0
    t0 = time.perf_counter()
    for img in frames:
        if telemetry is not None:
            cfg, snapshot = _handle_controls(cfg, telemetry, snapshot)
        landmarks = provider.next(state.last_frame + 1)
        state, report = process_frame(img, landmarks, state, cfg, snapshot=snapshot)
        for event in report.events:
            for sink in sinks:
                sink.emit(event)
        n_events += len(report.events)
        if telemetry is not None:
            telemetry.broadcast(report.to_wire())
    elapsed = time.perf_counter() - t0
    n_frames = state.last_frame + 1
    mean_fps = n_frames / elapsed if elapsed > 0 else 0.0
    if out is not None:
        out.write(
            f"frames: {n_frames}\nevents: {n_events}\nmean fps: {mean_fps:.1f}\n"
        )
    return RunSummary(
        frames=n_frames, events=n_events, mean_fps=mean_fps, elapsed_seconds=elapsed
    )


@dataclass(frozen=True)
class BenchResult:
    frames: int
    elapsed_seconds: float
    fps: float
    mean_micros: float
    p99_micros: float


def bench(
    cfg: EngineConfig,
    frames: Sequence[GrayImage],
    provider: LandmarkProvider,
    repeat: int = 1,
) -> BenchResult:
    """Throughput measurement over preloaded frames; state resets each pass
    so every pass sees the same stream."""
    if not frames:
        raise InvalidParameterError("bench needs at least one frame")
    if repeat < 1:
        raise InvalidParameterError(f"repeat must be >= 1, got {repeat}")
    latencies: list[int] = []
    t0 = time.perf_counter()
    for _ in range(repeat):
        state = EngineState()
        for img in frames:
            landmarks = provider.next(state.last_frame + 1)
            state, report = process_frame(img, landmarks, state, cfg)
            latencies.append(report.processing_micros)
    elapsed = time.perf_counter() - t0
    total = len(latencies)
    latencies.sort()
    p99 = latencies[min(total - 1, math.ceil(0.99 * total) - 1)]
    return BenchResult(
        frames=total,
        elapsed_seconds=elapsed,
        fps=total / elapsed if elapsed > 0 else 0.0,
        mean_micros=sum(latencies) / total,
        p99_micros=float(p99),
    )


def _pgm_paths(directory: str) -> list[str]:
    names = sorted(n for n in os.listdir(directory) if n.endswith(".pgm"))
    return [os.path.join(directory, n) for n in names]


def iter_pgm_dir(directory: str) -> Iterator[GrayImage]:
    """Frames in sorted filename order; position in the order is the frame
    index, which is how synth writes them."""
    for path in _pgm_paths(directory):
        yield read_pgm(path)


def load_pgm_dir(directory: str) -> list[GrayImage]:
    return list(iter_pgm_dir(directory))
