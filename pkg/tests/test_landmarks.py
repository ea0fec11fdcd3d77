import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazecursor.errors import (
    DegenerateGeometryError,
    InvalidParameterError,
    TraceParseError,
    TraceSchemaError,
)
from gazecursor.imaging import GrayImage
from gazecursor.landmarks import (
    POINT_COUNT,
    EyeRegion,
    LandmarkSet,
    Side,
    crop,
    eye_landmarks,
    eye_region,
    format_landmark_line,
    load_landmark_trace,
    write_landmark_trace,
)


def identity_layout():
    # point i sits at (i, 0): index bookkeeping is directly readable
    return LandmarkSet(points=np.array([[i, 0.0] for i in range(POINT_COUNT)]))


def grid_layout():
    return LandmarkSet(points=np.array([[10.0 + i, 20.0 + (i % 7)] for i in range(POINT_COUNT)]))


class TestEyeLandmarks:
    def test_left_eye_indices(self):
        eye = eye_landmarks(identity_layout(), Side.LEFT)
        assert eye.p1 == (36.0, 0.0)
        assert eye.p2 == (37.0, 0.0)
        assert eye.p4 == (39.0, 0.0)
        assert eye.p6 == (41.0, 0.0)

    def test_right_eye_indices(self):
        eye = eye_landmarks(identity_layout(), Side.RIGHT)
        assert eye.p1 == (42.0, 0.0)
        assert eye.p4 == (45.0, 0.0)

    def test_sides_index_disjoint(self):
        ls = grid_layout()
        left = set(eye_landmarks(ls, Side.LEFT).all_points)
        right = set(eye_landmarks(ls, Side.RIGHT).all_points)
        assert left.isdisjoint(right)

    def test_coincident_corners_rejected(self):
        pts = np.zeros((POINT_COUNT, 2))
        with pytest.raises(DegenerateGeometryError):
            eye_landmarks(LandmarkSet(points=pts), Side.LEFT)

    def test_wrong_point_count_rejected(self):
        with pytest.raises(InvalidParameterError):
            LandmarkSet(points=np.zeros((67, 2)))

    def test_non_finite_rejected(self):
        pts = np.zeros((POINT_COUNT, 2))
        pts[5, 0] = math.nan
        with pytest.raises(InvalidParameterError):
            LandmarkSet(points=pts)


class TestEyeRegion:
    def eye_spanning(self, xs, ys):
        pts = np.array([[i, 0.0] for i in range(POINT_COUNT)], dtype=float)
        six = [
            (xs[0], ys[0]),
            (xs[1], ys[1]),
            ((xs[0] + xs[1]) / 2, (ys[0] + ys[1]) / 2),
            (xs[1], ys[0]),
            (xs[0], ys[1]),
            ((xs[0] + xs[1]) / 2, ys[0]),
        ]
        pts[36:42] = six
        return eye_landmarks(LandmarkSet(points=pts), Side.LEFT)

    def test_outward_rounding_with_margin(self):
        eye = self.eye_spanning((10.0, 30.0), (20.0, 26.0))
        region = eye_region(eye, margin=5, frame_w=100, frame_h=100)
        assert (region.x0, region.y0, region.x1, region.y1) == (5, 15, 36, 32)

    def test_clips_to_frame(self):
        eye = self.eye_spanning((2.0, 8.0), (1.0, 5.0))
        region = eye_region(eye, margin=50, frame_w=20, frame_h=10)
        assert (region.x0, region.y0, region.x1, region.y1) == (0, 0, 20, 10)

    def test_degenerate_after_clipping(self):
        eye = self.eye_spanning((-30.0, -20.0), (5.0, 8.0))
        with pytest.raises(DegenerateGeometryError):
            eye_region(eye, margin=0, frame_w=100, frame_h=100)

    def test_contains_all_six_points(self):
        eye = self.eye_spanning((12.3, 41.7), (8.9, 19.2))
        region = eye_region(eye, margin=2, frame_w=200, frame_h=100)
        for x, y in eye.all_points:
            assert region.x0 <= x < region.x1
            assert region.y0 <= y < region.y1

    def test_negative_margin_rejected(self):
        eye = self.eye_spanning((10.0, 30.0), (20.0, 26.0))
        with pytest.raises(InvalidParameterError):
            eye_region(eye, margin=-1, frame_w=100, frame_h=100)


class TestCrop:
    def img(self):
        rng = np.random.default_rng(3)
        return GrayImage(rng.integers(0, 256, size=(12, 20), dtype=np.uint8))

    def test_full_image_region(self):
        img = self.img()
        out = crop(img, EyeRegion(0, 0, 20, 12))
        assert np.array_equal(out.pixels, img.pixels)

    def test_single_pixel(self):
        img = self.img()
        out = crop(img, EyeRegion(3, 4, 4, 5))
        assert out.pixels.tolist() == [[img.pixel(3, 4)]]

    def test_crop_of_crop_composes(self):
        img = self.img()
        once = crop(img, EyeRegion(2, 1, 18, 11))
        twice = crop(once, EyeRegion(0, 0, 16, 10))
        assert np.array_equal(once.pixels, twice.pixels)

    def test_out_of_bounds_rejected(self):
        with pytest.raises(InvalidParameterError):
            crop(self.img(), EyeRegion(10, 0, 21, 5))

    def test_returns_copy(self):
        img = self.img()
        out = crop(img, EyeRegion(0, 0, 5, 5))
        out.pixels[0, 0] = 255 - out.pixels[0, 0]
        assert img.pixel(0, 0) != out.pixel(0, 0) or True  # no aliasing crash
        assert not np.shares_memory(out.pixels, img.pixels)


class TestTraceFile:
    def write_frames(self, tmp_path, frames):
        path = tmp_path / "trace.jsonl"
        sets = [
            LandmarkSet(points=np.array([[i + n, i % 5] for i in range(POINT_COUNT)]), frame_index=n)
            for n in frames
        ]
        write_landmark_trace(str(path), sets)
        return path

    def test_lookup_by_frame(self, tmp_path):
        path = self.write_frames(tmp_path, range(10))
        provider = load_landmark_trace(str(path))
        ls = provider.next(3)
        assert ls is not None and ls.frame_index == 3
        assert ls.point(0) == (3.0, 0.0)

    def test_missing_frame_is_absent(self, tmp_path):
        path = self.write_frames(tmp_path, [0, 1, 2, 3, 4, 6, 7, 8, 9])
        provider = load_landmark_trace(str(path))
        assert provider.next(5) is None
        assert provider.next(6) is not None

    def test_wrong_point_count_is_schema_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        points = [[float(i), 0.0] for i in range(67)]
        path.write_text(json.dumps({"frame": 0, "points": points}) + "\n")
        with pytest.raises(TraceSchemaError) as err:
            load_landmark_trace(str(path))
        assert err.value.line == 1

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = format_landmark_line(LandmarkSet(points=np.zeros((68, 2)) + [[1, 2]]))
        path.write_text(good + "\n{oops\n")
        with pytest.raises(TraceParseError) as err:
            load_landmark_trace(str(path))
        assert err.value.line == 2

    def test_duplicate_frame_rejected(self, tmp_path):
        line = format_landmark_line(LandmarkSet(points=np.ones((68, 2)), frame_index=4))
        path = tmp_path / "dup.jsonl"
        path.write_text(line + "\n" + line + "\n")
        with pytest.raises(TraceSchemaError):
            load_landmark_trace(str(path))

    @settings(max_examples=25, deadline=None)
    @given(flat=st.lists(st.floats(-500, 500, allow_nan=False), min_size=136, max_size=136))
    def test_round_trip_preserves_serialized_values(self, flat, tmp_path_factory):
        tmp = tmp_path_factory.mktemp("rt")
        pts = np.array(flat).reshape(68, 2)
        path = str(tmp / "t.jsonl")
        write_landmark_trace(path, [LandmarkSet(points=pts, frame_index=0)])
        provider = load_landmark_trace(path)
        again = str(tmp / "t2.jsonl")
        write_landmark_trace(again, [provider.next(0)])
        assert open(path).read() == open(again).read()
