import base64
import io

import numpy as np
import pytest

from gazecursor.config import Detector, EngineConfig, set_value
from gazecursor.engine import (
    BenchResult,
    EngineState,
    bench,
    iter_pgm_dir,
    load_pgm_dir,
    process_frame,
    run,
)
from gazecursor.errors import InvalidParameterError
from gazecursor.events import EventKind, ListSink
from gazecursor.gaze import Direction
from gazecursor.imaging import GrayImage, write_pgm
from gazecursor.landmarks import POINT_COUNT, LandmarkProvider, LandmarkSet, Side
from gazecursor.pupil import Method
from gazecursor.synth import EyeSceneParams, TraceScript, render_trace


def materialize(script: TraceScript):
    imgs, sets = [], []
    for img, gt in render_trace(script):
        imgs.append(img)
        sets.append(gt.landmarks)
    return imgs, LandmarkProvider({ls.frame_index: ls for ls in sets})


def steady(params: EyeSceneParams, count: int) -> TraceScript:
    return TraceScript(segments=((count, params),))


def blink_script() -> TraceScript:
    """Five open, one open keyframe, three closed, five open: a clean
    3-frame blink with a step transition (no lerp through the threshold).
    Fully shut lids so the pupil detector genuinely loses the target."""
    open_eye = EyeSceneParams()
    closed = EyeSceneParams(openness=0.0)
    return TraceScript(
        segments=((5, open_eye), (1, open_eye), (2, closed), (1, closed), (5, open_eye))
    )


def drive(script: TraceScript, cfg: EngineConfig, provider=None):
    imgs, auto_provider = materialize(script)
    provider = provider if provider is not None else auto_provider
    state = EngineState()
    reports = []
    for img in imgs:
        state, report = process_frame(img, provider.next(state.last_frame + 1), state, cfg)
        reports.append(report)
    return state, reports


class TestProcessFrame:
    def test_absent_landmarks_short_circuit(self):
        img, _ = next(iter(render_trace(steady(EyeSceneParams(), 1))))
        state, report = process_frame(img, None, EngineState(), EngineConfig())
        assert report.direction is Direction.INVALID
        assert report.ear is None
        assert report.ratios is None
        assert report.pupil[Side.LEFT] is None and report.pupil[Side.RIGHT] is None
        assert report.events == ()
        assert state.last_frame == 0

    def test_frame_indices_sequential(self):
        _, reports = drive(steady(EyeSceneParams(), 4), EngineConfig())
        assert [r.frame_index for r in reports] == [0, 1, 2, 3]

    def test_center_gaze_classifies_center(self):
        _, reports = drive(steady(EyeSceneParams(), 1), EngineConfig())
        assert reports[0].direction is Direction.CENTER
        assert reports[0].ear is not None and reports[0].ratios is not None

    def test_look_left_dwell_gated_moves(self):
        _, reports = drive(steady(EyeSceneParams(pupil_offset=(-0.6, 0.0)), 5), EngineConfig())
        assert all(r.direction is Direction.LEFT for r in reports)
        move_frames = [r.frame_index for r in reports if r.events]
        assert move_frames == [2, 3, 4]
        for r in reports[2:]:
            assert [(e.kind, e.dx, e.dy) for e in r.events] == [(EventKind.MOVE_BY, -12, 0)]

    def test_blink_yields_one_click_on_reopen(self):
        _, reports = drive(blink_script(), EngineConfig())
        clicks = [
            (r.frame_index, e.kind)
            for r in reports
            for e in r.events
            if e.kind is EventKind.CLICK_LEFT
        ]
        assert clicks == [(9, EventKind.CLICK_LEFT)]
        assert [r.direction for r in reports[6:9]] == [Direction.INVALID] * 3

    def test_absent_landmark_frame_bridges_a_dwell(self):
        script = steady(EyeSceneParams(pupil_offset=(-0.6, 0.0)), 5)
        imgs, full = materialize(script)
        sparse = LandmarkProvider(
            {i: full.next(i) for i in range(5) if i != 3}  # drop frame 3
        )
        state = EngineState()
        reports = []
        for img in imgs:
            state, report = process_frame(
                img, sparse.next(state.last_frame + 1), state, EngineConfig()
            )
            reports.append(report)
        assert reports[3].direction is Direction.INVALID
        # the dropout is bridged, so the move keeps firing right through it
        assert [r.frame_index for r in reports if r.events] == [2, 3, 4]

    def test_degenerate_landmarks_become_diagnostics(self):
        img, _ = next(iter(render_trace(steady(EyeSceneParams(), 1))))
        pts = np.full((POINT_COUNT, 2), 30.0)
        collapsed = LandmarkSet(points=pts, frame_index=0)
        state, report = process_frame(img, collapsed, EngineState(), EngineConfig())
        assert report.direction is Direction.INVALID
        assert len(report.diagnostics) >= 2
        assert state.last_frame == 0

    def test_hough_detector_choice(self):
        cfg = set_value(EngineConfig(), "engine.detector", "hough")
        _, reports = drive(steady(EyeSceneParams(), 1), cfg)
        det = reports[0].pupil[Side.LEFT]
        assert det is not None and det.method is Method.HOUGH

    def test_report_wire_shape(self):
        _, reports = drive(steady(EyeSceneParams(pupil_offset=(-0.6, 0.0)), 3), EngineConfig())
        obj = reports[2].to_wire()
        assert obj["type"] == "report" and obj["frame"] == 2
        assert obj["direction"] == "left"
        assert set(obj["pupil"]) == {"left", "right"}
        assert obj["pupil"]["left"]["method"] == "threshold"
        assert obj["events"] == [{"frame": 2, "kind": "move_by", "dx": -12, "dy": 0}]
        assert "thumbnail" not in obj


class TestSmoothing:
    def setup_method(self):
        self.cfg = set_value(EngineConfig(), "engine.smoothing_enabled", True)

    def test_static_scene_smoothed_center_stays_on_target(self):
        raw_cfg = EngineConfig()
        script = steady(EyeSceneParams(), 6)
        _, raw_reports = drive(script, raw_cfg)
        state, smooth_reports = drive(script, self.cfg)
        assert state.kalman_left is not None and state.kalman_right is not None
        for raw, smooth in zip(raw_reports, smooth_reports):
            raw_det, smooth_det = raw.pupil[Side.LEFT], smooth.pupil[Side.LEFT]
            assert abs(smooth_det.center.cx - raw_det.center.cx) < 1.0
            assert abs(smooth_det.center.cy - raw_det.center.cy) < 1.0

    def test_detection_dropout_resets_tracker(self):
        imgs, provider = materialize(blink_script())
        state = EngineState()
        saw_reset = False
        for img in imgs:
            state, report = process_frame(
                img, provider.next(state.last_frame + 1), state, self.cfg
            )
            if report.pupil[Side.LEFT] is None:
                assert state.kalman_left is None
                saw_reset = True
        assert saw_reset

    def test_disabled_keeps_no_tracker(self):
        state, _ = drive(steady(EyeSceneParams(), 3), EngineConfig())
        assert state.kalman_left is None and state.kalman_right is None


class TestThumbnail:
    def test_snapshot_attaches_small_pgm(self):
        img, gt = next(iter(render_trace(steady(EyeSceneParams(), 1))))
        _, report = process_frame(img, gt.landmarks, EngineState(), EngineConfig(), snapshot=True)
        raw = base64.b64decode(report.thumbnail)
        assert raw.startswith(b"P5\n")
        w, h = (int(t) for t in raw.split(b"\n")[1].split())
        assert w <= 48 and h <= 48

    def test_snapshot_without_landmarks_uses_full_frame(self):
        img, _ = next(iter(render_trace(steady(EyeSceneParams(), 1))))
        _, report = process_frame(img, None, EngineState(), EngineConfig(), snapshot=True)
        raw = base64.b64decode(report.thumbnail)
        w, h = (int(t) for t in raw.split(b"\n")[1].split())
        assert (w, h) == (48, 24)  # 240x120 at stride 5

    def test_no_snapshot_no_thumbnail(self):
        _, reports = drive(steady(EyeSceneParams(), 1), EngineConfig())
        assert reports[0].thumbnail is None


class StubTelemetry:
    """Engine-facing duck type: scripted controls in, records out."""

    def __init__(self, scripted=None):
        self.scripted = scripted or {}
        self.calls = 0
        self.broadcasts = []
        self.replies = []

    def drain_controls(self):
        out = [(0, obj) for obj in self.scripted.get(self.calls, [])]
        self.calls += 1
        return out

    def reply(self, client_id, obj):
        self.replies.append((client_id, obj))

    def broadcast(self, obj):
        self.broadcasts.append(obj)


def strip_timing(wire_objs):
    out = []
    for obj in wire_objs:
        obj = dict(obj)
        obj.pop("processing_micros")
        out.append(obj)
    return out


class TestRun:
    def test_empty_source(self):
        summary = run(EngineConfig(), [], LandmarkProvider({}), sinks=())
        assert summary.frames == 0 and summary.events == 0

    def test_one_report_per_frame_and_sink_fanout(self):
        imgs, provider = materialize(steady(EyeSceneParams(pupil_offset=(-0.6, 0.0)), 5))
        sink = ListSink()
        telemetry = StubTelemetry()
        out = io.StringIO()
        summary = run(
            EngineConfig(), imgs, provider, sinks=[sink], telemetry=telemetry, out=out
        )
        assert summary.frames == 5
        assert len(telemetry.broadcasts) == 5
        assert summary.events == len(sink.events) == 3
        assert "frames: 5" in out.getvalue()

    def test_determinism_modulo_timing(self):
        script = blink_script()
        imgs, provider = materialize(script)
        t1, t2 = StubTelemetry(), StubTelemetry()
        s1, s2 = ListSink(), ListSink()
        run(EngineConfig(), imgs, provider, sinks=[s1], telemetry=t1)
        run(EngineConfig(), imgs, provider, sinks=[s2], telemetry=t2)
        assert s1.events == s2.events
        assert strip_timing(t1.broadcasts) == strip_timing(t2.broadcasts)

    def test_control_applies_at_frame_boundary(self):
        # u = -0.45 measures h near 0.275: LEFT under the default band edge
        # 0.35, CENTER once h_left is lowered to 0.2.
        imgs, provider = materialize(steady(EyeSceneParams(pupil_offset=(-0.45, 0.0)), 8))
        telemetry = StubTelemetry(
            {4: [{"type": "set", "key": "gaze.h_left", "value": 0.2}]}
        )
        run(EngineConfig(), imgs, provider, telemetry=telemetry)
        directions = [obj["direction"] for obj in telemetry.broadcasts]
        assert directions == ["left"] * 4 + ["center"] * 4
        assert telemetry.replies == [
            (0, {"type": "ack", "key": "gaze.h_left", "detail": "0.2"})
        ]

    def test_rejected_control_leaves_run_unchanged(self):
        imgs, provider = materialize(steady(EyeSceneParams(pupil_offset=(-0.45, 0.0)), 4))
        telemetry = StubTelemetry(
            {2: [{"type": "set", "key": "gaze.h_left", "value": 0.9}]}
        )
        run(EngineConfig(), imgs, provider, telemetry=telemetry)
        assert [obj["direction"] for obj in telemetry.broadcasts] == ["left"] * 4
        assert telemetry.replies[0][1]["type"] == "err"

    def test_snapshot_toggle_via_control(self):
        imgs, provider = materialize(steady(EyeSceneParams(), 4))
        telemetry = StubTelemetry(
            {1: [{"type": "snapshot", "on": True}], 3: [{"type": "snapshot", "on": False}]}
        )
        run(EngineConfig(), imgs, provider, telemetry=telemetry)
        with_thumb = ["thumbnail" in obj for obj in telemetry.broadcasts]
        assert with_thumb == [False, True, True, False]

    def test_unparseable_control_gets_err_reply(self):
        imgs, provider = materialize(steady(EyeSceneParams(), 2))
        telemetry = StubTelemetry({0: [{"type": "warp"}]})
        run(EngineConfig(), imgs, provider, telemetry=telemetry)
        assert telemetry.replies[0][1]["type"] == "err"


class TestBench:
    def test_latency_accounting(self):
        imgs, provider = materialize(steady(EyeSceneParams(), 3))
        result = bench(EngineConfig(), imgs, provider, repeat=2)
        assert isinstance(result, BenchResult)
        assert result.frames == 6
        assert result.fps > 0
        assert result.p99_micros >= result.mean_micros * 0.1

    def test_empty_frames_rejected(self):
        with pytest.raises(InvalidParameterError):
            bench(EngineConfig(), [], LandmarkProvider({}))

    def test_bad_repeat_rejected(self):
        imgs, provider = materialize(steady(EyeSceneParams(), 1))
        with pytest.raises(InvalidParameterError):
            bench(EngineConfig(), imgs, provider, repeat=0)


class TestPgmDir:
    def test_sorted_order_and_filter(self, tmp_path):
        write_pgm(GrayImage(np.full((1, 1), 20, dtype=np.uint8)), str(tmp_path / "b.pgm"))
        write_pgm(GrayImage(np.full((1, 1), 10, dtype=np.uint8)), str(tmp_path / "a.pgm"))
        (tmp_path / "notes.txt").write_text("not a frame")
        frames = load_pgm_dir(str(tmp_path))
        assert [int(f.pixels[0, 0]) for f in frames] == [10, 20]

    def test_missing_dir_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            list(iter_pgm_dir(str(tmp_path / "absent")))
