"""Pupil localization inside the cropped eye region.

Two independent detectors: the filter chain (bilateral smoothing, grey
erosion, inverted threshold, contours, moment centroid) and a circular
Hough transform over Sobel gradients. Either can return absent; absence
is a value, not an error (closed lids, no dark blob). A constant-velocity
Kalman filter smooths the centroid stream across frames.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericalFailureError
from .imaging import (
    Centroid,
    GrayImage,
    bilateral_filter,
    centroid_of,
    erode,
    find_contours,
    threshold_binary,
)


class Method(enum.Enum):
    THRESHOLD = "threshold"
    HOUGH = "hough"


@dataclass(frozen=True)
class PupilConfig:
    bilateral_diameter: int = 7
    bilateral_sigma_color: float = 40.0
    bilateral_sigma_space: float = 3.0
    erode_radius: int = 1
    erode_iterations: int = 2
    threshold: int = 40  # applied inverted: foreground at or below this
    min_area_frac: float = 0.01
    max_area_frac: float = 0.5

    def __post_init__(self) -> None:
        if self.bilateral_diameter < 1 or self.bilateral_diameter % 2 == 0:
            raise InvalidParameterError(
                f"bilateral_diameter must be odd and >= 1, got {self.bilateral_diameter}"
            )
        if self.bilateral_sigma_color <= 0 or self.bilateral_sigma_space <= 0:
            raise InvalidParameterError("bilateral sigmas must be > 0")
        if self.erode_radius < 1 or self.erode_iterations < 1:
            raise InvalidParameterError("erode_radius and erode_iterations must be >= 1")
        if not 0 <= self.threshold <= 255:
            raise InvalidParameterError(f"threshold must lie in [0,255], got {self.threshold}")
        if not 0 < self.min_area_frac < self.max_area_frac <= 1:
            raise InvalidParameterError(
                f"need 0 < min_area_frac < max_area_frac <= 1, "
                f"got {self.min_area_frac}, {self.max_area_frac}"
            )


@dataclass(frozen=True)
class HoughConfig:
    r_min: int = 3
    r_max: int = 12
    gradient_threshold: float = 20.0
    accumulator_min_votes: int = 10

    def __post_init__(self) -> None:
        if not 1 <= self.r_min <= self.r_max:
            raise InvalidParameterError(
                f"need 1 <= r_min <= r_max, got {self.r_min}, {self.r_max}"
            )
        if self.gradient_threshold < 0:
            raise InvalidParameterError("gradient_threshold must be >= 0")
        if self.accumulator_min_votes < 1:
            raise InvalidParameterError("accumulator_min_votes must be >= 1")


@dataclass(frozen=True)
class PupilDetection:
    center: Centroid
    area: float
    method: Method
    frame_index: int = 0

    def __post_init__(self) -> None:
        if self.area <= 0:
            raise InvalidParameterError(f"area must be > 0, got {self.area}")


def detect_pupil_threshold(
    eye_img: GrayImage, cfg: PupilConfig, frame_index: int = 0
) -> PupilDetection | None:
    """Filter-chain detector on the cropped eye; absent when no contour
    with area fraction in [min_area_frac, max_area_frac] survives."""
    smoothed = bilateral_filter(
        eye_img, cfg.bilateral_diameter, cfg.bilateral_sigma_color, cfg.bilateral_sigma_space
    )
    eroded = erode(smoothed, cfg.erode_radius, cfg.erode_iterations)
    mask = threshold_binary(eroded, cfg.threshold, invert=True)

    region_area = eye_img.width * eye_img.height
    lo = cfg.min_area_frac * region_area
    hi = cfg.max_area_frac * region_area
    best = None
    for contour in find_contours(mask):
        if not lo <= contour.component_pixels <= hi:
            continue
        if best is None or contour.component_pixels > best.component_pixels:
            best = contour
    if best is None:
        return None
    center = centroid_of(mask, best)
    return PupilDetection(
        center=center, area=float(best.component_pixels), method=Method.THRESHOLD,
        frame_index=frame_index,
    )


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = _SOBEL_X.T


def _sobel(px: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel gradients; the one-pixel border stays zero."""
    src = px.astype(np.float64)
    h, w = src.shape
    gx = np.zeros_like(src)
    gy = np.zeros_like(src)
    for ky in range(3):
        for kx in range(3):
            window = src[ky : h - 2 + ky, kx : w - 2 + kx]
            if _SOBEL_X[ky, kx]:
                gx[1 : h - 1, 1 : w - 1] += _SOBEL_X[ky, kx] * window
            if _SOBEL_Y[ky, kx]:
                gy[1 : h - 1, 1 : w - 1] += _SOBEL_Y[ky, kx] * window
    return gx, gy


def detect_pupil_hough(
    eye_img: GrayImage, cfg: HoughConfig, frame_index: int = 0
) -> PupilDetection | None:
    """Circular Hough detector: edge pixels vote along both gradient
    polarities at every candidate radius; the fullest accumulator cell
    that clears accumulator_min_votes wins."""
    h, w = eye_img.height, eye_img.width
    need = 2 * cfg.r_max + 1
    if w < need or h < need:
        raise InvalidParameterError(
            f"image {w}x{h} smaller than {need}x{need} required for r_max {cfg.r_max}"
        )
    gx, gy = _sobel(eye_img.pixels)
    mag = np.hypot(gx, gy)
    ys, xs = np.nonzero(mag > cfg.gradient_threshold)
    if ys.size == 0:
        return None
    ux = gx[ys, xs] / mag[ys, xs]
    uy = gy[ys, xs] / mag[ys, xs]

    radii = np.arange(cfg.r_min, cfg.r_max + 1)
    acc = np.zeros((radii.size, h, w), dtype=np.int32)
    for ri, r in enumerate(radii):
        for sign in (1.0, -1.0):
            cx = np.rint(xs + sign * r * ux).astype(np.int64)
            cy = np.rint(ys + sign * r * uy).astype(np.int64)
            ok = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
            np.add.at(acc[ri], (cy[ok], cx[ok]), 1)
    flat_best = int(np.argmax(acc))
    votes = int(acc.flat[flat_best])
    if votes < cfg.accumulator_min_votes:
        return None
    ri, cy, cx = np.unravel_index(flat_best, acc.shape)
    r = int(radii[ri])
    return PupilDetection(
        center=Centroid(cx=float(cx), cy=float(cy)),
        area=math.pi * r * r,
        method=Method.HOUGH,
        frame_index=frame_index,
    )


def hough_radius(detection: PupilDetection) -> float:
    """Radius back-computed from a Hough detection's disk area."""
    return math.sqrt(detection.area / math.pi)


_H = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]])


def _check_psd(cov: np.ndarray) -> np.ndarray:
    sym = (cov + cov.T) / 2.0
    if np.max(np.abs(cov - cov.T)) > 1e-9:
        raise NumericalFailureError("covariance lost symmetry")
    eigs = np.linalg.eigvalsh(sym)
    if eigs.min() < -1e-9:
        raise NumericalFailureError(f"covariance not PSD (min eigenvalue {eigs.min():.3e})")
    return sym


@dataclass(frozen=True, eq=False)
class KalmanState:
    """Constant-velocity tracker state: (x, y, vx, vy) plus covariance."""

    estimate: np.ndarray
    covariance: np.ndarray
    process_noise: float = 0.05
    measurement_noise: float = 1.0

    def __post_init__(self) -> None:
        est = np.asarray(self.estimate, dtype=np.float64).reshape(4)
        cov = np.asarray(self.covariance, dtype=np.float64).reshape(4, 4)
        if self.process_noise < 0 or self.measurement_noise <= 0:
            raise InvalidParameterError("need process_noise >= 0 and measurement_noise > 0")
        object.__setattr__(self, "estimate", est)
        object.__setattr__(self, "covariance", _check_psd(cov))

    @property
    def position(self) -> tuple[float, float]:
        return (float(self.estimate[0]), float(self.estimate[1]))

    @property
    def velocity(self) -> tuple[float, float]:
        return (float(self.estimate[2]), float(self.estimate[3]))


def init_kalman(
    x: float, y: float, process_noise: float = 0.05, measurement_noise: float = 1.0,
    position_var: float = 4.0, velocity_var: float = 4.0,
) -> KalmanState:
    cov = np.diag([position_var, position_var, velocity_var, velocity_var]).astype(np.float64)
    return KalmanState(
        estimate=np.array([x, y, 0.0, 0.0]),
        covariance=cov,
        process_noise=process_noise,
        measurement_noise=measurement_noise,
    )


def kalman_predict_update(
    state: KalmanState, measurement: Centroid | None, dt: float = 1.0
) -> KalmanState:
    """One predict step plus, when a measurement is present, one
    position-only update (Joseph form, so the covariance stays PSD)."""
    if dt <= 0:
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    q, rn = state.process_noise, state.measurement_noise
    f = np.array(
        [[1, 0, dt, 0], [0, 1, 0, dt], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=np.float64
    )
    # White-acceleration process noise for a constant-velocity model.
    d4, d3, d2 = dt**4 / 4.0, dt**3 / 2.0, dt**2
    qm = q * np.array(
        [[d4, 0, d3, 0], [0, d4, 0, d3], [d3, 0, d2, 0], [0, d3, 0, d2]], dtype=np.float64
    )
    est = f @ state.estimate
    cov = f @ state.covariance @ f.T + qm

    if measurement is not None:
        z = np.array([measurement.cx, measurement.cy])
        r_mat = rn * np.eye(2)
        innovation = z - _H @ est
        s_mat = _H @ cov @ _H.T + r_mat
        gain = cov @ _H.T @ np.linalg.inv(s_mat)
        est = est + gain @ innovation
        ikh = np.eye(4) - gain @ _H
        cov = ikh @ cov @ ikh.T + gain @ r_mat @ gain.T

    return KalmanState(
        estimate=est, covariance=cov, process_noise=q, measurement_noise=rn
    )
