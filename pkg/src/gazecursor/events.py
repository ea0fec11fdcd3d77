"""Cursor-event synthesis: directions and blinks in, MoveBy/Click out.

A direction must be held for dwell_frames consecutive frames before it
moves the cursor; from the frame the run count reaches the dwell, every
frame of the run emits one step. INVALID frames bridge dropouts: up to
hold_frames of them extend the current run as if the direction had been
seen, beyond that the run resets. CENTER always resets. SHORT_BLINK
clicks unless a refractory window from the previous click is still open;
LONG_CLOSE is rest and never clicks. Within one frame, movement is
emitted before a click.

Everything here is deterministic: identical inputs produce identical
event sequences, and traces serialize to byte-identical JSON Lines.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .blink import BlinkEvent, BlinkKind
from .errors import ContractError, InvalidParameterError, TraceParseError, TraceSchemaError
from .gaze import MOVABLE_DIRECTIONS, Direction


class EventKind(enum.Enum):
    MOVE_BY = "move_by"
    CLICK_LEFT = "click_left"


@dataclass(frozen=True)
class EventConfig:
    dwell_frames: int = 3
    move_step: int = 12
    click_refractory_frames: int = 15
    hold_frames: int = 5

    def __post_init__(self) -> None:
        if self.dwell_frames < 1:
            raise InvalidParameterError(f"dwell_frames must be >= 1, got {self.dwell_frames}")
        if self.move_step < 0 or self.click_refractory_frames < 0 or self.hold_frames < 0:
            raise InvalidParameterError("event config values cannot be negative")


@dataclass(frozen=True)
class CursorEvent:
    frame_index: int
    kind: EventKind
    dx: int = 0
    dy: int = 0

    def __post_init__(self) -> None:
        if self.kind is EventKind.MOVE_BY:
            if (self.dx == 0) == (self.dy == 0):
                raise InvalidParameterError("MOVE_BY must step along exactly one axis")
        elif self.dx or self.dy:
            raise InvalidParameterError("only MOVE_BY carries a displacement")


@dataclass(frozen=True)
class EventState:
    current_direction: Direction | None = None
    direction_run: int = 0
    invalid_run: int = 0
    refractory_until: int = 0
    last_frame: int = -1


_STEPS = {
    Direction.LEFT: (-1, 0),
    Direction.RIGHT: (1, 0),
    Direction.UP: (0, -1),
    Direction.DOWN: (0, 1),
}


def synthesize(
    state: EventState,
    direction: Direction,
    blink: BlinkEvent | None,
    frame: int,
    cfg: EventConfig,
) -> tuple[EventState, list[CursorEvent]]:
    """Advance the machine one frame; returns the events it emits."""
    if frame <= state.last_frame:
        raise ContractError(f"frame {frame} not after previous {state.last_frame}")

    cur = state.current_direction
    run = state.direction_run
    invalid_run = state.invalid_run

    if direction in _STEPS:
        invalid_run = 0
        if direction is cur:
            run += 1
        else:
            cur, run = direction, 1
    elif direction is Direction.INVALID:
        invalid_run += 1
        if cur is not None and invalid_run <= cfg.hold_frames:
            run += 1  # bridge the dropout as if the direction persisted
        else:
            cur, run = None, 0
    else:  # CENTER: an actual on-target observation
        cur, run = None, 0
        invalid_run = 0

    events: list[CursorEvent] = []
    if cur is not None and run >= cfg.dwell_frames:
        dx, dy = _STEPS[cur]
        events.append(
            CursorEvent(
                frame_index=frame,
                kind=EventKind.MOVE_BY,
                dx=dx * cfg.move_step,
                dy=dy * cfg.move_step,
            )
        )

    refractory_until = state.refractory_until
    if blink is not None and blink.kind is BlinkKind.SHORT_BLINK:
        if frame >= refractory_until:
            events.append(CursorEvent(frame_index=frame, kind=EventKind.CLICK_LEFT))
            refractory_until = frame + cfg.click_refractory_frames

    new_state = EventState(
        current_direction=cur,
        direction_run=run,
        invalid_run=invalid_run,
        refractory_until=refractory_until,
        last_frame=frame,
    )
    return new_state, events


class EventSink:
    """Anything that accepts synthesized events; OS injection would live
    behind this same interface."""

    def emit(self, event: CursorEvent) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass


class TraceRecorder(EventSink):
    """Sink that appends events to a JSON Lines trace file."""

    def __init__(self, path: str):
        self._fh = open(path, "w", encoding="utf-8")

    def emit(self, event: CursorEvent) -> None:
        self._fh.write(format_event_line(event) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceRecorder":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class ListSink(EventSink):
    """Sink that collects events in memory."""

    def __init__(self) -> None:
        self.events: list[CursorEvent] = []

    def emit(self, event: CursorEvent) -> None:
        self.events.append(event)


def format_event_line(event: CursorEvent) -> str:
    obj: dict = {"frame": event.frame_index, "kind": event.kind.value}
    if event.kind is EventKind.MOVE_BY:
        obj["dx"] = event.dx
        obj["dy"] = event.dy
    return json.dumps(obj, separators=(",", ":"))


def parse_event_line(line: str, line_no: int) -> CursorEvent:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(line_no, f"bad JSON: {exc.msg}") from None
    if not isinstance(obj, dict) or "frame" not in obj or "kind" not in obj:
        raise TraceSchemaError(line_no, "expected object with 'frame' and 'kind'")
    frame = obj["frame"]
    if not isinstance(frame, int) or frame < 0:
        raise TraceSchemaError(line_no, f"'frame' must be a non-negative integer, got {frame!r}")
    try:
        kind = EventKind(obj["kind"])
    except ValueError:
        raise TraceSchemaError(line_no, f"unknown event kind {obj['kind']!r}") from None
    if kind is EventKind.MOVE_BY:
        dx, dy = obj.get("dx"), obj.get("dy")
        if not isinstance(dx, int) or not isinstance(dy, int):
            raise TraceSchemaError(line_no, "move_by needs integer 'dx' and 'dy'")
        try:
            return CursorEvent(frame_index=frame, kind=kind, dx=dx, dy=dy)
        except InvalidParameterError as exc:
            raise TraceSchemaError(line_no, str(exc)) from None
    return CursorEvent(frame_index=frame, kind=kind)


def replay_trace(path: str) -> list[CursorEvent]:
    """Parse an event trace back into the exact recorded event list."""
    events: list[CursorEvent] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            events.append(parse_event_line(line, line_no))
    return events
