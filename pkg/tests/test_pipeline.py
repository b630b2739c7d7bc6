import numpy as np
import pytest

from blasthole.models.camera import CameraSettings, DepthImage, FilterConfig
from blasthole.models.cloud import PointCloud
from blasthole.models.config import HoleConfig, TrackingConfig
from blasthole.models.detection import TrackState
from blasthole.models.geometry import RobotPose
from blasthole.services.camera import camera_pose_for
from blasthole.services.pipeline import (
    coarse_detect,
    coarse_min_area,
    detect,
    next_lidar,
    process_frame,
    require_track,
    timed,
    track_step,
)
from blasthole.tasks.sweeps import (
    APPROACH_DISTANCES,
    approach_sequence,
    bench_scene,
    detection_sweep,
    distance_sweep,
    evaluate_scene,
    phantom_sweep,
)
from blasthole.utils.constants import Frame, Lidar, Stage
from blasthole.utils.exceptions import CoarseMiss, InvalidInputError, TrackLostError

SETTINGS = CameraSettings(1.0, 90.0, 128, 96)
NO_FILTER = FilterConfig(1, 1, 0.0, 0.05)


def cone_image(void_centre=(64.0, 48.0), void_radius=6.0, cone=True):
    """Gently sloped cone 30 px wide over flat ground one meter below the camera"""
    rows, cols = np.indices(SETTINGS.shape)
    r = np.hypot(cols - 64.0, rows - 48.0)
    depth = np.where(r <= 30.0, 0.85 + 0.15 * r / 30.0, 1.0) if cone else np.ones(SETTINGS.shape)
    valid = np.hypot(cols - void_centre[0], rows - void_centre[1]) > void_radius
    return DepthImage(np.where(valid, depth, np.inf), valid, SETTINGS, camera_pose_for((2.0, 0.0, 0.0), SETTINGS))


def empty_body_cloud():
    return PointCloud(np.zeros((0, 3)), Frame.body)


class TestNextLidar:
    cfg = TrackingConfig()

    def test_switches_to_dense_inside_the_switch_distance(self):
        assert next_lidar(Lidar.sparse, 3.5, self.cfg) is Lidar.sparse
        assert next_lidar(Lidar.sparse, 2.9, self.cfg) is Lidar.dense

    def test_hysteresis_band(self):
        assert next_lidar(Lidar.dense, 3.05, self.cfg) is Lidar.dense
        assert next_lidar(Lidar.dense, 3.2, self.cfg) is Lidar.dense
        assert next_lidar(Lidar.dense, 3.25, self.cfg) is Lidar.sparse

    def test_no_chatter_around_the_threshold(self):
        active = Lidar.sparse
        trace = []
        for distance in (3.1, 2.95, 3.05, 2.98, 3.1, 3.15):
            active = next_lidar(active, distance, self.cfg)
            trace.append(active)
        assert trace == [Lidar.sparse] + [Lidar.dense] * 5


class TestCoarseDetect:
    def test_central_void(self):
        result = coarse_detect(cone_image(), NO_FILTER, min_area=10)
        assert result.pixel == pytest.approx((64.0, 48.0))
        np.testing.assert_allclose(result.centre_3d, [2.0, 0.0, 0.0], atol=1e-12)
        assert result.area == int(np.count_nonzero(~cone_image().valid))

    def test_no_void(self):
        with pytest.raises(CoarseMiss):
            coarse_detect(cone_image(void_radius=-1.0), NO_FILTER)

    def test_void_far_from_the_centre(self):
        with pytest.raises(CoarseMiss):
            coarse_detect(cone_image(void_centre=(110.0, 48.0), cone=False), NO_FILTER)

    def test_void_below_the_area_floor(self):
        with pytest.raises(CoarseMiss):
            coarse_detect(cone_image(), NO_FILTER, min_area=500)

    def test_area_floor_from_the_smallest_hole(self):
        area = coarse_min_area(cone_image(), HoleConfig(), 0.5)
        assert area == pytest.approx(0.5 * np.pi * (0.12 * 64.0) ** 2)


class TestTracking:
    def test_require_track(self):
        state = TrackState()
        assert require_track(state) is state
        with pytest.raises(TrackLostError):
            require_track(TrackState(lost=True, lost_frames=6))

    def test_lost_after_consecutive_misses(self, cfg):
        state = TrackState()
        for frame in range(cfg.tracking.track_lost_frames):
            state, detection, record = process_frame(empty_body_cloud(), RobotPose(), state, cfg)
            assert detection is None
            assert record.miss.startswith("cone")
            assert record.frame == frame
            assert not state.lost
        state, _ = track_step(empty_body_cloud(), RobotPose(), state, cfg)
        assert state.lost
        assert state.lost_frames == cfg.tracking.track_lost_frames + 1

    def test_world_frame_cloud_rejected(self, cfg):
        with pytest.raises(InvalidInputError):
            process_frame(PointCloud(np.zeros((0, 3)), Frame.utm), RobotPose(), TrackState(), cfg)

    def test_detect_on_an_empty_cloud(self, cfg):
        with pytest.raises(CoarseMiss):
            detect(empty_body_cloud(), RobotPose(), cfg)

    def test_timed_records_milliseconds(self):
        timings = {}
        with timed(timings, "stage"):
            pass
        assert timings["stage"] >= 0.0


@pytest.mark.slow
class TestSceneDetection:
    def test_close_range_fine_detection(self, cfg):
        bench, pose = bench_scene(0, 0.5)
        outcome = evaluate_scene(bench, pose, cfg, seed=0)
        assert outcome["detected"]
        assert outcome["stage"] == Stage.fine.value
        assert outcome["centre_error"] <= 0.02

    def test_repeatable(self, cfg):
        bench, pose = bench_scene(2, 0.8)
        assert evaluate_scene(bench, pose, cfg, seed=2) == evaluate_scene(bench, pose, cfg, seed=2)

    def test_lidar_switches_on_approach(self, cfg):
        from blasthole.services.scene import scan
        from blasthole.tasks.sweeps import pattern_for

        bench, _ = bench_scene(4, 0.0)
        state = TrackState()
        for x in (-4.0, -3.5, -2.5):
            pose = RobotPose(x, 0.0)
            result = scan(bench, pose, pattern_for(abs(x), cfg), seed=4)
            state, _ = track_step(result.cloud, pose, state, cfg)
        assert state.active_lidar is Lidar.dense

    def test_near_flank_is_seen_from_above_the_cone(self, cfg):
        for distance in (0.2, 0.3):
            bench, pose = bench_scene(7, distance)
            outcome = evaluate_scene(bench, pose, cfg, seed=7)
            assert outcome["cone_error"] <= 0.05
            assert outcome["detected"]
            assert outcome["centre_error"] <= 0.02

    def test_dense_frame_within_the_frame_budget(self, cfg):
        from blasthole.models.scene import BeamPattern
        from blasthole.services.scene import scan

        bench, pose = bench_scene(3, 0.5)
        result = scan(bench, pose, BeamPattern.dense(azimuth_step=360.0 / 2048), seed=3)
        assert len(result.cloud) >= 200_000
        process_frame(result.cloud, pose, TrackState(), cfg)  # warm-up
        _, detection, record = process_frame(result.cloud, pose, TrackState(), cfg)
        assert detection is not None and detection.stage is Stage.fine
        assert sum(record.timings.values()) <= 333.0


@pytest.mark.slow
class TestSweeps:
    def test_close_range_accuracy(self):
        summary = detection_sweep.apply(kwargs={"scenes": 200, "max_distance": 1.0, "seed": 0}).get()
        assert summary["detection_rate"] >= 0.95
        assert summary["max_centre_error"] <= 0.02
        assert summary["max_radius_error"] <= 0.15

    def test_cone_failure_profile(self):
        summary = distance_sweep.apply(kwargs={"scenes": 50, "seed": 0}).get()
        assert [row["distance"] for row in summary["rows"]][0] == 0.5
        assert summary["near_cone_failure_rate"] <= 0.05
        assert summary["far_cone_failure_rate"] > summary["near_cone_failure_rate"]

    def test_central_hole_beats_flank_pits(self):
        summary = phantom_sweep.apply(kwargs={"scenes": 100, "seed": 0}).get()
        assert summary["central"] >= 90

    def test_approach_replay(self, cfg):
        rows = approach_sequence(APPROACH_DISTANCES, seed=0, cfg=cfg)
        assert [row["distance"] for row in rows] == list(APPROACH_DISTANCES)
        assert all(row["cone_error"] is not None for row in rows)
        assert rows[0]["active_lidar"] == Lidar.sparse.value
        assert rows[-1]["active_lidar"] == Lidar.dense.value
        assert [row["stage"] for row in rows[-3:]] == [Stage.fine.value] * 3
        assert rows[-1]["centre_error"] <= 0.02

        # the camera closes in, so the hole grows in pixels while its metric opening shrinks
        resolved = [row for row in rows if row["radius"] is not None]
        pixel_radii = [row["pixel_radius"] for row in resolved]
        radii = [row["radius"] for row in resolved]
        assert pixel_radii[-1] > pixel_radii[0]
        assert all(later <= earlier + 0.02 for earlier, later in zip(radii, radii[1:]))
