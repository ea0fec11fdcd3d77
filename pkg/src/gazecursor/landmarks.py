"""68-point facial landmark model, per-eye extraction, and cropping.

Uses the standard 68-point template: the image-left eye occupies
0-indexed points 36..41 and the image-right eye 42..47, each running
corner, upper lid x2, corner, lower lid x2. "Left" means image
coordinates, not the subject's left; mirrored webcams flip the two.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometryError,
    InvalidParameterError,
    TraceParseError,
    TraceSchemaError,
)
from .imaging import GrayImage

POINT_COUNT = 68
_LEFT_BASE = 36
_RIGHT_BASE = 42

Point = tuple[float, float]


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """One frame's 68 sub-pixel (x, y) points in frame space."""

    points: np.ndarray
    frame_index: int = 0

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (POINT_COUNT, 2):
            raise InvalidParameterError(
                f"landmark set needs exactly {POINT_COUNT} (x,y) points, got shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise InvalidParameterError("landmark coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def point(self, i: int) -> Point:
        return (float(self.points[i, 0]), float(self.points[i, 1]))


@dataclass(frozen=True)
class EyeLandmarks:
    """The six points of one eye: p1 leading corner, p2/p3 upper lid,
    p4 opposite corner, p5/p6 lower lid (p6 under p2, p5 under p3)."""

    p1: Point
    p2: Point
    p3: Point
    p4: Point
    p5: Point
    p6: Point
    side: Side

    def __post_init__(self) -> None:
        if self.p1 == self.p4:
            raise DegenerateGeometryError(f"{self.side.value} eye corners coincide at {self.p1}")

    @property
    def all_points(self) -> tuple[Point, ...]:
        return (self.p1, self.p2, self.p3, self.p4, self.p5, self.p6)


@dataclass(frozen=True)
class EyeRegion:
    """Half-open integer pixel bounds [x0,x1) x [y0,y1), clipped to frame."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if self.x0 >= self.x1 or self.y0 >= self.y1:
            raise DegenerateGeometryError(
                f"empty region ({self.x0},{self.y0},{self.x1},{self.y1})"
            )

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


def eye_landmarks(ls: LandmarkSet, side: Side) -> EyeLandmarks:
    """Pick one eye's six points out of the 68-point set, in index order."""
    base = _LEFT_BASE if side is Side.LEFT else _RIGHT_BASE
    p = [ls.point(base + k) for k in range(6)]
    return EyeLandmarks(p1=p[0], p2=p[1], p3=p[2], p4=p[3], p5=p[4], p6=p[5], side=side)


def eye_region(eye: EyeLandmarks, margin: int, frame_w: int, frame_h: int) -> EyeRegion:
    """Bounding box of the six eye points, expanded by `margin`, rounded
    outward (x1/y1 exclusive: ceil(max)+margin+1), clipped to the frame."""
    if margin < 0:
        raise InvalidParameterError(f"margin must be >= 0, got {margin}")
    xs = [p[0] for p in eye.all_points]
    ys = [p[1] for p in eye.all_points]
    x0 = max(0, math.floor(min(xs)) - margin)
    y0 = max(0, math.floor(min(ys)) - margin)
    x1 = min(frame_w, math.ceil(max(xs)) + margin + 1)
    y1 = min(frame_h, math.ceil(max(ys)) + margin + 1)
    if x0 >= x1 or y0 >= y1:
        raise DegenerateGeometryError(
            f"eye region degenerate after clipping to {frame_w}x{frame_h} frame"
        )
    return EyeRegion(x0=x0, y0=y0, x1=x1, y1=y1)


def crop(img: GrayImage, region: EyeRegion) -> GrayImage:
    """Copy of the sub-raster under `region`."""
    if region.x1 > img.width or region.y1 > img.height:
        raise InvalidParameterError(
            f"region ({region.x0},{region.y0},{region.x1},{region.y1}) "
            f"exceeds {img.width}x{img.height} image"
        )
    return GrayImage(img.pixels[region.y0 : region.y1, region.x0 : region.x1].copy())


class LandmarkProvider:
    """Per-frame landmark lookup backed by a parsed trace file.

    next(frame_index) returns that frame's LandmarkSet, or None when the
    face was not found that frame. Absence is a normal value, not an
    error: detectors drop frames.
    """

    def __init__(self, frames: dict[int, LandmarkSet]):
        self._frames = dict(frames)

    def next(self, frame_index: int) -> LandmarkSet | None:
        return self._frames.get(frame_index)

    @property
    def frame_indices(self) -> list[int]:
        return sorted(self._frames)

    def __len__(self) -> int:
        return len(self._frames)


def parse_landmark_line(line: str, line_no: int) -> LandmarkSet:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(line_no, f"bad JSON: {exc.msg}") from None
    if not isinstance(obj, dict) or "frame" not in obj or "points" not in obj:
        raise TraceSchemaError(line_no, "expected object with 'frame' and 'points'")
    frame = obj["frame"]
    points = obj["points"]
    if not isinstance(frame, int) or frame < 0:
        raise TraceSchemaError(line_no, f"'frame' must be a non-negative integer, got {frame!r}")
    if not isinstance(points, list) or len(points) != POINT_COUNT:
        n = len(points) if isinstance(points, list) else "non-list"
        raise TraceSchemaError(line_no, f"'points' must hold {POINT_COUNT} pairs, got {n}")
    for pair in points:
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in pair)
        ):
            raise TraceSchemaError(line_no, f"bad point {pair!r}")
    try:
        return LandmarkSet(points=np.array(points, dtype=np.float64), frame_index=frame)
    except InvalidParameterError as exc:
        raise TraceSchemaError(line_no, str(exc)) from None


def load_landmark_trace(path: str) -> LandmarkProvider:
    """Parse a JSON Lines landmark trace: {"frame": n, "points": [[x,y] x 68]}."""
    frames: dict[int, LandmarkSet] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            ls = parse_landmark_line(line, line_no)
            if ls.frame_index in frames:
                raise TraceSchemaError(line_no, f"duplicate frame {ls.frame_index}")
            frames[ls.frame_index] = ls
    return LandmarkProvider(frames)


def format_landmark_line(ls: LandmarkSet) -> str:
    pts = [[round(float(x), 3), round(float(y), 3)] for x, y in ls.points]
    return json.dumps({"frame": ls.frame_index, "points": pts}, separators=(",", ":"))


def write_landmark_trace(path: str, sets: "list[LandmarkSet]") -> None:
    """Write sets as JSONL, coordinates at 3 decimal places; parseable back
    by load_landmark_trace with identical serialized values."""
    with open(path, "w", encoding="utf-8") as fh:
        for ls in sets:
            fh.write(format_landmark_line(ls) + "\n")
