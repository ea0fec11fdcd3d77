"""Deterministic synthetic eye-scene renderer.

Ground-truth oracle for the whole pipeline: renders a single eye as a
lens between two parabolic lid arcs, with iris and pupil disks, on a
skin background, plus seeded Gaussian noise. Every frame is a pure
function of its parameters; the noise stream depends only on the seed.

Geometry. With corners p1, p4 a distance L apart, let u-hat be the unit
corner axis and n-hat its +90 degree rotation (pointing toward the lower
lid in image coordinates). In local coordinates s (fraction of half-span
along the axis) and t (pixels along n-hat), the lids are the parabolas
t = -a(1-s^2) and t = +a(1-s^2) with half-aperture a = openness x
aperture_max. Lid landmarks sit at s = -1/3 and +1/3 on each arc, so the
ground-truth eye aspect ratio is (16/9) a / L, linear in openness.

The pupil center sits at s = u, t = v x aperture_max x (1 - u^2): the
vertical term is normalized by the full aperture at that abscissa, not
the current one, so the pupil does not ride the lids during a blink.
Occlusion still applies when painting. The center lies inside the lid
aperture exactly when |u| < 1 and |v| < openness.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import InvalidParameterError, SceneError
from .imaging import GrayImage
from .landmarks import POINT_COUNT, LandmarkSet, Point
from .rng import gaussian_field

# Below this openness the aperture is treated as shut: no pupil needs to
# be visible and ground truth reports the eye closed.
OPEN_FLOOR = 0.02

_IRIS_SCALE = 2.2  # iris radius as a multiple of pupil radius


@dataclass(frozen=True)
class EyeSceneParams:
    frame_w: int = 240
    frame_h: int = 120
    corner_left: Point = (70.0, 60.0)
    corner_right: Point = (170.0, 60.0)
    openness: float = 1.0
    aperture_max: float = 22.0
    pupil_offset: tuple[float, float] = (0.0, 0.0)
    pupil_radius: float = 7.0
    intensity_sclera: float = 195.0
    intensity_iris: float = 90.0
    intensity_pupil: float = 20.0
    intensity_skin: float = 120.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.frame_w < 1 or self.frame_h < 1:
            raise InvalidParameterError(f"frame must be >= 1x1, got {self.frame_w}x{self.frame_h}")
        if not self.corner_left[0] < self.corner_right[0]:
            raise InvalidParameterError("corner_left must lie left of corner_right")
        if not 0.0 <= self.openness <= 1.0:
            raise InvalidParameterError(f"openness must lie in [0,1], got {self.openness}")
        if self.aperture_max <= 0:
            raise InvalidParameterError(f"aperture_max must be > 0, got {self.aperture_max}")
        u, v = self.pupil_offset
        if not (-1.0 <= u <= 1.0 and -1.0 <= v <= 1.0):
            raise InvalidParameterError(f"pupil_offset components must lie in [-1,1], got {(u, v)}")
        if self.pupil_radius < 1:
            raise InvalidParameterError(f"pupil_radius must be >= 1, got {self.pupil_radius}")
        for name in ("intensity_sclera", "intensity_iris", "intensity_pupil", "intensity_skin"):
            val = getattr(self, name)
            if not 0 <= val <= 255:
                raise InvalidParameterError(f"{name} must lie in [0,255], got {val}")
        if not self.intensity_pupil < self.intensity_iris < self.intensity_sclera:
            raise InvalidParameterError("need intensity_pupil < intensity_iris < intensity_sclera")
        if self.noise_sigma < 0:
            raise InvalidParameterError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


@dataclass(frozen=True)
class GroundTruth:
    pupil_center: Point
    landmarks: LandmarkSet
    is_open: bool
    openness: float


@dataclass(frozen=True)
class TraceScript:
    """Keyframe segments (frame_count, params); each segment interpolates
    linearly toward the next segment's numeric parameters, the last holds
    constant. Repeat a keyframe to hold it, then step."""

    segments: tuple[tuple[int, EyeSceneParams], ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise InvalidParameterError("script needs at least one segment")
        for count, _ in self.segments:
            if count < 1:
                raise InvalidParameterError(f"segment frame_count must be >= 1, got {count}")

    @property
    def total_frames(self) -> int:
        return sum(count for count, _ in self.segments)


def _geometry(params: EyeSceneParams):
    """Corner points, eye center, local axes, span length, half-aperture."""
    cl = np.array(params.corner_left, dtype=np.float64)
    cr = np.array(params.corner_right, dtype=np.float64)
    span = cr - cl
    length = float(np.hypot(*span))
    u_hat = span / length
    n_hat = np.array([-u_hat[1], u_hat[0]])
    center = (cl + cr) / 2.0
    a = params.openness * params.aperture_max
    return cl, cr, center, u_hat, n_hat, length, a


def _arc_point(center, u_hat, n_hat, length, s: float, t: float) -> Point:
    p = center + u_hat * (s * length / 2.0) + n_hat * t
    return (float(p[0]), float(p[1]))


def scene_landmarks(params: EyeSceneParams, frame_index: int = 0) -> LandmarkSet:
    """The 68-point set for a scene: the six eye points written to both
    eye slots (one physical eye observed as both), the remaining points
    on a fixed ellipse standing in for the face outline."""
    cl, cr, center, u_hat, n_hat, length, a = _geometry(params)
    upper = -a
    six = [
        (float(cl[0]), float(cl[1])),
        _arc_point(center, u_hat, n_hat, length, -1 / 3, upper * (8 / 9)),
        _arc_point(center, u_hat, n_hat, length, +1 / 3, upper * (8 / 9)),
        (float(cr[0]), float(cr[1])),
        _arc_point(center, u_hat, n_hat, length, +1 / 3, -upper * (8 / 9)),
        _arc_point(center, u_hat, n_hat, length, -1 / 3, -upper * (8 / 9)),
    ]
    pts = np.zeros((POINT_COUNT, 2), dtype=np.float64)
    cx, cy = params.frame_w / 2.0, params.frame_h / 2.0
    for i in range(POINT_COUNT):
        ang = 2.0 * math.pi * i / POINT_COUNT
        pts[i] = (cx + 0.45 * params.frame_w * math.cos(ang), cy + 0.45 * params.frame_h * math.sin(ang))
    pts[36:42] = six
    pts[42:48] = six
    return LandmarkSet(points=pts, frame_index=frame_index)


def pupil_center_of(params: EyeSceneParams) -> Point:
    """Ground-truth pupil center in frame coordinates."""
    _, _, center, u_hat, n_hat, length, _ = _geometry(params)
    u, v = params.pupil_offset
    t = v * params.aperture_max * (1.0 - u * u)
    p = center + u_hat * (u * length / 2.0) + n_hat * t
    return (float(p[0]), float(p[1]))


def render_eye(params: EyeSceneParams, frame_index: int = 0) -> tuple[GrayImage, GroundTruth]:
    """Render one frame plus its ground truth. Identical params give
    byte-identical frames."""
    _, _, center, u_hat, n_hat, length, a = _geometry(params)
    h, w = params.frame_h, params.frame_w
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    dx = gx - center[0]
    dy = gy - center[1]
    s = (dx * u_hat[0] + dy * u_hat[1]) / (length / 2.0)
    t = dx * n_hat[0] + dy * n_hat[1]

    # Strict comparison: a shut lid (a = 0) paints nothing, not a midline.
    lid = a * (1.0 - s * s)
    eye_mask = (np.abs(s) < 1.0) & (np.abs(t) < lid)

    pcx, pcy = pupil_center_of(params)
    dist2 = (gx - pcx) ** 2 + (gy - pcy) ** 2
    iris_mask = eye_mask & (dist2 <= (_IRIS_SCALE * params.pupil_radius) ** 2)
    pupil_mask = eye_mask & (dist2 <= params.pupil_radius**2)

    open_enough = params.openness > OPEN_FLOOR
    if open_enough and not pupil_mask.any():
        raise SceneError("pupil disk lies entirely outside the visible eye region")

    field = np.full((h, w), params.intensity_skin, dtype=np.float64)
    field[eye_mask] = params.intensity_sclera
    field[iris_mask] = params.intensity_iris
    field[pupil_mask] = params.intensity_pupil
    if params.noise_sigma > 0:
        field = field + gaussian_field(params.seed, (h, w), params.noise_sigma)
    img = GrayImage(np.clip(np.rint(field), 0, 255).astype(np.uint8))

    u, v = params.pupil_offset
    is_open = open_enough and abs(u) < 1.0 and abs(v) < params.openness
    gt = GroundTruth(
        pupil_center=(pcx, pcy),
        landmarks=scene_landmarks(params, frame_index),
        is_open=is_open,
        openness=params.openness,
    )
    return img, gt


_LERP_FIELDS = (
    "openness",
    "aperture_max",
    "pupil_radius",
    "noise_sigma",
    "intensity_sclera",
    "intensity_iris",
    "intensity_pupil",
    "intensity_skin",
)


def _lerp_params(a: EyeSceneParams, b: EyeSceneParams, f: float) -> EyeSceneParams:
    if f == 0.0:
        return a
    def mix(x: float, y: float) -> float:
        return x + (y - x) * f

    changes = {name: mix(getattr(a, name), getattr(b, name)) for name in _LERP_FIELDS}
    changes["corner_left"] = (
        mix(a.corner_left[0], b.corner_left[0]),
        mix(a.corner_left[1], b.corner_left[1]),
    )
    changes["corner_right"] = (
        mix(a.corner_right[0], b.corner_right[0]),
        mix(a.corner_right[1], b.corner_right[1]),
    )
    changes["pupil_offset"] = (
        mix(a.pupil_offset[0], b.pupil_offset[0]),
        mix(a.pupil_offset[1], b.pupil_offset[1]),
    )
    # Frame dimensions and the seed are structural, not animatable.
    return replace(a, **changes)


def script_params(script: TraceScript) -> Iterator[EyeSceneParams]:
    """Per-frame parameters for a script, in frame order."""
    segs = script.segments
    for k, (count, params) in enumerate(segs):
        nxt = segs[k + 1][1] if k + 1 < len(segs) else None
        for j in range(count):
            if nxt is None:
                yield params
            else:
                yield _lerp_params(params, nxt, j / count)


def render_trace(script: TraceScript) -> Iterator[tuple[GrayImage, GroundTruth]]:
    """Render every scripted frame in order; deterministic."""
    for frame_index, params in enumerate(script_params(script)):
        yield render_eye(params, frame_index=frame_index)


_PAIR_FIELDS = ("corner_left", "corner_right", "pupil_offset")


def _params_from_obj(obj: dict, where: str) -> EyeSceneParams:
    known = {f.name for f in dataclasses.fields(EyeSceneParams)}
    changes: dict = {}
    for name, value in obj.items():
        if name not in known:
            raise InvalidParameterError(f"{where}: unknown parameter {name!r}")
        if name in _PAIR_FIELDS:
            if not (isinstance(value, (list, tuple)) and len(value) == 2):
                raise InvalidParameterError(f"{where}: {name} must be a pair, got {value!r}")
            value = (float(value[0]), float(value[1]))
        changes[name] = value
    return EyeSceneParams(**changes)


def load_script(text: str) -> TraceScript:
    """Parse a script file: JSON with a "segments" list of
    {"count": n, "params": {field: value, ...}} objects, field names as in
    EyeSceneParams, and an optional "defaults" object merged under every
    segment's params."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"script is not valid JSON: {exc.msg}") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("segments"), list):
        raise InvalidParameterError("script must be an object with a 'segments' list")
    defaults = obj.get("defaults", {})
    if not isinstance(defaults, dict):
        raise InvalidParameterError("'defaults' must be an object")
    segments = []
    for i, seg in enumerate(obj["segments"]):
        where = f"segment {i}"
        if not isinstance(seg, dict) or not isinstance(seg.get("count"), int):
            raise InvalidParameterError(f"{where}: needs an integer 'count'")
        overrides = seg.get("params", {})
        if not isinstance(overrides, dict):
            raise InvalidParameterError(f"{where}: 'params' must be an object")
        params = _params_from_obj({**defaults, **overrides}, where)
        segments.append((seg["count"], params))
    return TraceScript(segments=tuple(segments))
