"""Gaze ratios from pupil centroids and eye landmarks, plus direction
classification.

The horizontal ratio projects the centroid onto the corner axis (0 at
p1, 1 at p4), which keeps it stable under head roll. The vertical ratio
measures the signed offset from the lid midline along the axis normal,
normalized by the lid aperture, shifted so the midline reads 0.5. LEFT
and RIGHT are image-coordinate directions: a mirrored webcam flips them.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import DegenerateGeometryError, InvalidParameterError
from .landmarks import EyeLandmarks, EyeRegion, Side
from .pupil import PupilDetection


class Direction(enum.Enum):
    CENTER = "center"
    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"
    INVALID = "invalid"


MOVABLE_DIRECTIONS = (Direction.LEFT, Direction.RIGHT, Direction.UP, Direction.DOWN)


@dataclass(frozen=True)
class GazeConfig:
    h_left: float = 0.35
    h_right: float = 0.65
    v_up: float = 0.35
    v_down: float = 0.65

    def __post_init__(self) -> None:
        for name in ("h_left", "h_right", "v_up", "v_down"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0,1], got {val}")
        if not self.h_left < self.h_right:
            raise InvalidParameterError("h_left must be below h_right")
        if not self.v_up < self.v_down:
            raise InvalidParameterError("v_up must be below v_down")


@dataclass(frozen=True)
class GazeRatios:
    h: float
    v: float
    per_eye: Mapping[Side, tuple[float, float]] = field(default_factory=dict)
    frame_index: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.h <= 1.0 or not 0.0 <= self.v <= 1.0:
            raise InvalidParameterError("combined ratios must lie in [0,1]")
        if self.per_eye:
            hs = [hv[0] for hv in self.per_eye.values()]
            vs = [hv[1] for hv in self.per_eye.values()]
            if (
                abs(self.h - sum(hs) / len(hs)) > 1e-9
                or abs(self.v - sum(vs) / len(vs)) > 1e-9
            ):
                raise InvalidParameterError("combined ratios must average the per-eye ratios")


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def _eye_ratios(
    detection: PupilDetection, eye: EyeLandmarks, region: EyeRegion
) -> tuple[float, float]:
    # centroid comes in eye-region coordinates; landmarks live in frame space
    cx = detection.center.cx + region.x0
    cy = detection.center.cy + region.y0

    ax = eye.p4[0] - eye.p1[0]
    ay = eye.p4[1] - eye.p1[1]
    span2 = ax * ax + ay * ay
    h = ((cx - eye.p1[0]) * ax + (cy - eye.p1[1]) * ay) / span2

    span = math.sqrt(span2)
    nx, ny = -ay / span, ax / span  # +90 degrees: toward the lower lid
    mid_upper = ((eye.p2[0] + eye.p3[0]) / 2.0, (eye.p2[1] + eye.p3[1]) / 2.0)
    mid_lower = ((eye.p6[0] + eye.p5[0]) / 2.0, (eye.p6[1] + eye.p5[1]) / 2.0)
    aperture = math.hypot(mid_lower[0] - mid_upper[0], mid_lower[1] - mid_upper[1])
    if aperture == 0.0:
        raise DegenerateGeometryError(
            f"{eye.side.value} eye aperture is zero but a pupil was detected"
        )
    midline = ((mid_upper[0] + mid_lower[0]) / 2.0, (mid_upper[1] + mid_lower[1]) / 2.0)
    v = 0.5 + ((cx - midline[0]) * nx + (cy - midline[1]) * ny) / aperture
    return _clamp01(h), _clamp01(v)


def gaze_ratios(
    detections: Mapping[Side, PupilDetection | None],
    eyes: Mapping[Side, EyeLandmarks],
    regions: Mapping[Side, EyeRegion | None],
    frame_index: int = 0,
) -> GazeRatios | None:
    """Combined and per-eye (h, v); None when neither eye has a detection."""
    per_eye: dict[Side, tuple[float, float]] = {}
    for side, detection in detections.items():
        if detection is None:
            continue
        region = regions.get(side)
        if region is None:
            raise InvalidParameterError(f"{side.value} detection lacks its eye region")
        per_eye[side] = _eye_ratios(detection, eyes[side], region)
    if not per_eye:
        return None
    hs = [hv[0] for hv in per_eye.values()]
    vs = [hv[1] for hv in per_eye.values()]
    return GazeRatios(
        h=sum(hs) / len(hs), v=sum(vs) / len(vs), per_eye=per_eye, frame_index=frame_index
    )


def classify_direction(ratios, blink_closed: bool, cfg: GazeConfig) -> Direction:
    """Threshold bands to a discrete direction; horizontal wins ties.

    `ratios` is a GazeRatios or None; None or a closed eye is INVALID.
    """
    if ratios is None or blink_closed:
        return Direction.INVALID
    if ratios.h < cfg.h_left:
        return Direction.LEFT
    if ratios.h > cfg.h_right:
        return Direction.RIGHT
    if ratios.v < cfg.v_up:
        return Direction.UP
    if ratios.v > cfg.v_down:
        return Direction.DOWN
    return Direction.CENTER
