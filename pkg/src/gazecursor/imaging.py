"""Grayscale raster types and the pupil-isolation filter chain primitives.

All filters use a clip-and-renormalize border policy: windows are clipped
to the image and statistics are taken over in-bounds pixels only. No
padding values are ever invented.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit intensity raster. `pixels` is a (height, width) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise InvalidParameterError(f"image must be 2-D and non-empty, got shape {px.shape}")
        if px.dtype != np.uint8:
            if px.min() < 0 or px.max() > 255:
                raise InvalidParameterError("intensities must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def pixel(self, x: int, y: int) -> int:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise InvalidParameterError(f"pixel ({x},{y}) outside {self.width}x{self.height} image")
        return int(self.pixels[y, x])


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Foreground/background raster. `mask` is a (height, width) bool array."""

    mask: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.mask)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise InvalidParameterError(f"mask must be 2-D and non-empty, got shape {m.shape}")
        object.__setattr__(self, "mask", m.astype(bool))

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


@dataclass(frozen=True)
class Contour:
    """Ordered outer boundary of one 8-connected foreground component.

    Consecutive points are 8-neighbors and the trace is closed (the first
    point is an 8-neighbor of the last), except for single-pixel components
    which carry exactly one point.
    """

    points: tuple[tuple[int, int], ...]
    component_pixels: int


@dataclass(frozen=True)
class Centroid:
    cx: float
    cy: float


def bilateral_filter(
    img: GrayImage, diameter: int, sigma_color: float, sigma_space: float
) -> GrayImage:
    """Edge-preserving smoother: Gaussian weights in both space and intensity.

    Each output pixel is the weighted mean of its diameter x diameter window,
    weight = exp(-d_space^2 / 2*sigma_space^2) * exp(-d_intensity^2 / 2*sigma_color^2),
    renormalized over in-bounds pixels and rounded to the nearest intensity.
    """
    if diameter < 1 or diameter % 2 == 0:
        raise InvalidParameterError(f"diameter must be odd and >= 1, got {diameter}")
    if sigma_color <= 0 or sigma_space <= 0:
        raise InvalidParameterError("sigma_color and sigma_space must be > 0")

    radius = diameter // 2
    src = img.pixels.astype(np.int16)
    h, w = src.shape

    # Intensity deltas are integers in [-255, 255]; precompute the range kernel
    # as a lookup table so the inner loop does no transcendental math.
    deltas = np.arange(-255, 256, dtype=np.float64)
    range_lut = np.exp(-(deltas**2) / (2.0 * sigma_color**2))

    num = np.zeros((h, w), dtype=np.float64)
    den = np.zeros((h, w), dtype=np.float64)
    for dy in range(-radius, radius + 1):
        ys0, ys1 = max(0, dy), h + min(0, dy)      # destination rows
        for dx in range(-radius, radius + 1):
            xs0, xs1 = max(0, dx), w + min(0, dx)  # destination cols
            # A negative upper bound would wrap around; shifts past the
            # image edge simply contribute nothing.
            if ys0 >= ys1 or xs0 >= xs1:
                continue
            w_space = math.exp(-(dx * dx + dy * dy) / (2.0 * sigma_space**2))
            shifted = src[ys0 - dy : ys1 - dy, xs0 - dx : xs1 - dx]
            center = src[ys0:ys1, xs0:xs1]
            wgt = range_lut[shifted - center + 255] * w_space
            num[ys0:ys1, xs0:xs1] += wgt * shifted
            den[ys0:ys1, xs0:xs1] += wgt
    out = np.clip(np.rint(num / den), 0, 255).astype(np.uint8)
    return GrayImage(out)


def _min_filter_1d(arr: np.ndarray, radius: int, axis: int) -> np.ndarray:
    out = arr.copy()
    n = arr.shape[axis]
    sl = [slice(None), slice(None)]
    sr = [slice(None), slice(None)]
    for k in range(1, min(radius, n - 1) + 1):
        sl[axis], sr[axis] = slice(k, None), slice(None, -k)
        np.minimum(out[tuple(sl)], arr[tuple(sr)], out=out[tuple(sl)])
        np.minimum(out[tuple(sr)], arr[tuple(sl)], out=out[tuple(sr)])
    return out


def erode(img: GrayImage, radius: int, iterations: int = 1) -> GrayImage:
    """Grayscale erosion: minimum over the (2*radius+1)^2 window, clipped at
    borders, repeated `iterations` times."""
    if radius < 1:
        raise InvalidParameterError(f"radius must be >= 1, got {radius}")
    if iterations < 1:
        raise InvalidParameterError(f"iterations must be >= 1, got {iterations}")
    out = img.pixels
    for _ in range(iterations):
        # The square-window minimum is separable into two 1-D passes.
        out = _min_filter_1d(_min_filter_1d(out, radius, axis=1), radius, axis=0)
    return GrayImage(out)


def threshold_binary(img: GrayImage, t: int, invert: bool = False) -> BinaryImage:
    """invert=False: foreground where pixel > t; invert=True: pixel <= t.

    The pupil chain runs inverted because the pupil is the dark blob.
    """
    if not 0 <= t <= 255:
        raise InvalidParameterError(f"threshold must lie in [0, 255], got {t}")
    if invert:
        return BinaryImage(img.pixels <= t)
    return BinaryImage(img.pixels > t)


# Clockwise 8-neighborhood in image coordinates (y grows downward),
# starting east: E, SE, S, SW, W, NW, N, NE.
_MOORE_DIRS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def _rebacktrack(found_dir: int) -> int:
    """Direction index, from the newly entered pixel, of the last background
    position scanned before `found_dir` hit foreground."""
    prev = (found_dir - 1) % 8
    # That position relative to the old pixel, re-expressed from the new one.
    dx = _MOORE_DIRS[prev][0] - _MOORE_DIRS[found_dir][0]
    dy = _MOORE_DIRS[prev][1] - _MOORE_DIRS[found_dir][1]
    return _MOORE_DIRS.index((dx, dy))


def _trace_boundary(mask: np.ndarray, start: tuple[int, int]) -> tuple[tuple[int, int], ...]:
    """Moore-neighbor trace of the outer boundary, clockwise from the
    topmost-leftmost pixel. Out-of-bounds counts as background."""
    h, w = mask.shape

    def is_fg(x: int, y: int) -> bool:
        return 0 <= x < w and 0 <= y < h and mask[y, x]

    # Backtrack starts at the west neighbor, which is background by choice
    # of start (leftmost pixel of the topmost row of the component).
    points = [start]
    cur = start
    back_dir = 4  # index of W in _MOORE_DIRS
    first_move: tuple[tuple[int, int], int] | None = None
    seen_states = {(start, back_dir)}
    while True:
        found = -1
        for step in range(1, 9):
            d = (back_dir + step) % 8
            nx, ny = cur[0] + _MOORE_DIRS[d][0], cur[1] + _MOORE_DIRS[d][1]
            if is_fg(nx, ny):
                found = d
                break
        if found < 0:
            return (start,)  # isolated pixel
        nxt = (cur[0] + _MOORE_DIRS[found][0], cur[1] + _MOORE_DIRS[found][1])
        if first_move is None:
            first_move = (nxt, found)
        elif cur == start and (nxt, found) == first_move:
            break  # about to repeat the opening move: cycle closed
        cur = nxt
        back_dir = _rebacktrack(found)
        state = (cur, back_dir)
        if state in seen_states:
            break  # safety net; the walk state is deterministic
        seen_states.add(state)
        points.append(cur)
    # The walk re-appends the start on wrap-around; drop the duplicate.
    if len(points) > 1 and points[-1] == points[0]:
        points.pop()
    return tuple(points)


def _label_components(mask: np.ndarray) -> tuple[np.ndarray, list[int], list[tuple[int, int]]]:
    """Two-pass union-find labeling over foreground pixels only.

    Returns (label grid with -1 background, per-component pixel counts,
    per-component topmost-leftmost pixel), components in raster order of
    their first pixel.
    """
    h, w = mask.shape
    labels = np.full((h, w), -1, dtype=np.int32)
    parent: list[int] = []

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    coords = np.argwhere(mask)  # raster order: y then x
    for y, x in coords:
        best = -1
        neigh = []
        for nx, ny in ((x - 1, y - 1), (x, y - 1), (x + 1, y - 1), (x - 1, y)):
            if 0 <= nx < w and 0 <= ny < h and labels[ny, nx] >= 0:
                neigh.append(find(labels[ny, nx]))
        if not neigh:
            best = len(parent)
            parent.append(best)
        else:
            best = min(neigh)
            for r in neigh:
                if r != best:
                    parent[r] = best
        labels[y, x] = best

    # Resolve and renumber in raster order of first appearance.
    remap: dict[int, int] = {}
    counts: list[int] = []
    firsts: list[tuple[int, int]] = []
    for y, x in coords:
        root = find(labels[y, x])
        if root not in remap:
            remap[root] = len(counts)
            counts.append(0)
            firsts.append((int(x), int(y)))
        idx = remap[root]
        labels[y, x] = idx
        counts[idx] += 1
    return labels, counts, firsts


def find_contours(bin_img: BinaryImage) -> list[Contour]:
    """One contour per 8-connected foreground component, outer boundaries
    only, ordered by raster position of the topmost-leftmost pixel."""
    mask = bin_img.mask
    _, counts, firsts = _label_components(mask)
    return [
        Contour(points=_trace_boundary(mask, start), component_pixels=count)
        for start, count in zip(firsts, counts)
    ]


def read_pgm(path: str) -> GrayImage:
    """Read a binary (P5) PGM file with maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()

    # Header: magic + three integer tokens, whitespace separated, with
    # optional '#' comments running to end of line.
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InvalidParameterError(f"{path}: truncated PGM header")
        return data[start:pos]

    if next_token() != b"P5":
        raise InvalidParameterError(f"{path}: not a binary PGM (P5) file")
    try:
        width, height, maxval = int(next_token()), int(next_token()), int(next_token())
    except ValueError as exc:
        raise InvalidParameterError(f"{path}: malformed PGM header") from exc
    if maxval != 255:
        raise InvalidParameterError(f"{path}: unsupported maxval {maxval}, expected 255")
    if width < 1 or height < 1:
        raise InvalidParameterError(f"{path}: bad dimensions {width}x{height}")
    pos += 1  # single whitespace byte after the header
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise InvalidParameterError(f"{path}: raster truncated")
    return GrayImage(np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy())


def encode_pgm(img: GrayImage) -> bytes:
    """Binary (P5) PGM bytes; read_pgm round-trips them bit-exactly."""
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.pixels.tobytes()


def write_pgm(img: GrayImage, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))


def centroid_of(bin_img: BinaryImage, contour: Contour) -> Centroid:
    """Center of mass of the filled component the contour bounds, via
    zeroth/first moments over its pixels."""
    mask = bin_img.mask
    h, w = mask.shape
    sx, sy = contour.points[0]
    if not (0 <= sx < w and 0 <= sy < h) or not mask[sy, sx]:
        raise InvalidParameterError("contour does not belong to this image")
    seen = np.zeros((h, w), dtype=bool)
    stack = [(sx, sy)]
    seen[sy, sx] = True
    sum_x = sum_y = n = 0
    while stack:
        x, y = stack.pop()
        sum_x += x
        sum_y += y
        n += 1
        for dx, dy in _MOORE_DIRS:
            nx, ny = x + dx, y + dy
            if 0 <= nx < w and 0 <= ny < h and mask[ny, nx] and not seen[ny, nx]:
                seen[ny, nx] = True
                stack.append((nx, ny))
    return Centroid(cx=sum_x / n, cy=sum_y / n)
