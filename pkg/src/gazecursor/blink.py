"""Eye-aspect-ratio computation and the debounced blink state machine.

The ratio is vertical over horizontal, so a closing eye drives it toward
zero and the blink threshold acts as a floor. Closures shorter than
min_frames are treated as measurement noise; closures longer than
max_click_frames reopen as LONG_CLOSE rather than SHORT_BLINK so that a
deliberate long shut-eye does not fire a click.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ContractError, DegenerateGeometryError, InvalidParameterError
from .landmarks import EyeLandmarks, LandmarkSet, Side, eye_landmarks


class BlinkPhase(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


class BlinkKind(enum.Enum):
    SHORT_BLINK = "short_blink"
    LONG_CLOSE = "long_close"


@dataclass(frozen=True)
class EarSample:
    left: float
    right: float
    mean: float
    frame_index: int

    def __post_init__(self) -> None:
        if self.left < 0 or self.right < 0:
            raise InvalidParameterError("eye aspect ratios cannot be negative")
        if abs(self.mean - (self.left + self.right) / 2.0) > 1e-9:
            raise InvalidParameterError("mean must equal (left+right)/2")


@dataclass(frozen=True)
class BlinkConfig:
    ear_threshold: float = 0.21
    min_frames: int = 2
    max_click_frames: int = 12

    def __post_init__(self) -> None:
        if self.ear_threshold <= 0:
            raise InvalidParameterError(f"ear_threshold must be > 0, got {self.ear_threshold}")
        if self.min_frames < 1:
            raise InvalidParameterError(f"min_frames must be >= 1, got {self.min_frames}")
        if self.min_frames > self.max_click_frames:
            raise InvalidParameterError(
                f"min_frames ({self.min_frames}) cannot exceed "
                f"max_click_frames ({self.max_click_frames})"
            )


@dataclass(frozen=True)
class BlinkState:
    phase: BlinkPhase = BlinkPhase.OPEN
    closed_run: int = 0
    last_frame: int = -1
    last_event_frame: int = -1

    def __post_init__(self) -> None:
        if self.phase is BlinkPhase.OPEN and self.closed_run != 0:
            raise InvalidParameterError("closed_run must be 0 while OPEN")


@dataclass(frozen=True)
class BlinkEvent:
    start_frame: int
    end_frame: int
    duration_frames: int
    kind: BlinkKind

    def __post_init__(self) -> None:
        if self.duration_frames != self.end_frame - self.start_frame:
            raise InvalidParameterError("duration_frames must equal end_frame - start_frame")


def _dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def eye_aspect_ratio(eye: EyeLandmarks) -> float:
    """(|p2-p6| + |p3-p5|) / (2 |p1-p4|)."""
    horizontal = _dist(eye.p1, eye.p4)
    if horizontal == 0.0:
        raise DegenerateGeometryError(f"{eye.side.value} eye has zero corner span")
    return (_dist(eye.p2, eye.p6) + _dist(eye.p3, eye.p5)) / (2.0 * horizontal)


def ear_sample(ls: LandmarkSet, frame_index: int) -> EarSample:
    """Per-eye ratios plus their mean for one frame."""
    left = eye_aspect_ratio(eye_landmarks(ls, Side.LEFT))
    right = eye_aspect_ratio(eye_landmarks(ls, Side.RIGHT))
    return EarSample(left=left, right=right, mean=(left + right) / 2.0, frame_index=frame_index)


def update_blink(
    state: BlinkState, sample: EarSample, cfg: BlinkConfig
) -> tuple[BlinkState, BlinkEvent | None]:
    """Advance the machine by one sample.

    An event fires only on the CLOSED->OPEN transition, and only when the
    closure lasted at least min_frames. The event's end_frame is the
    reopening frame.
    """
    if sample.frame_index <= state.last_frame:
        raise ContractError(
            f"frame index {sample.frame_index} not after previous {state.last_frame}"
        )
    frame = sample.frame_index
    closed = sample.mean < cfg.ear_threshold

    if closed:
        run = state.closed_run + 1 if state.phase is BlinkPhase.CLOSED else 1
        return (
            BlinkState(
                phase=BlinkPhase.CLOSED,
                closed_run=run,
                last_frame=frame,
                last_event_frame=state.last_event_frame,
            ),
            None,
        )

    event = None
    if state.phase is BlinkPhase.CLOSED and state.closed_run >= cfg.min_frames:
        kind = (
            BlinkKind.SHORT_BLINK
            if state.closed_run <= cfg.max_click_frames
            else BlinkKind.LONG_CLOSE
        )
        event = BlinkEvent(
            start_frame=frame - state.closed_run,
            end_frame=frame,
            duration_frames=state.closed_run,
            kind=kind,
        )
    new_state = BlinkState(
        phase=BlinkPhase.OPEN,
        closed_run=0,
        last_frame=frame,
        last_event_frame=frame if event is not None else state.last_event_frame,
    )
    return new_state, event
