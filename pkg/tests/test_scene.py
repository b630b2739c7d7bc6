import numpy as np
import pytest

from blasthole.models.geometry import RobotPose
from blasthole.models.scene import BeamPattern, Pit, SceneSpec
from blasthole.services.scene import (
    beam_directions,
    funnel_return_fraction,
    generate,
    pit_sphere,
    scan,
    sensor_pose_for,
)
from blasthole.utils.constants import Frame, PointLabel
from blasthole.utils.exceptions import ConfigError

SPEC = SceneSpec()
SCENE = generate(SPEC)
NADIR = BeamPattern(1, 0.0, 1.0, elevation_center=-90.0, azimuth_fov=0.0, range_noise=0.0)


class TestSceneSpec:
    def test_default_collar(self):
        assert SPEC.collar_diameter == pytest.approx(SPEC.hole_diameter + 0.02)
        assert SPEC.hole_radius == pytest.approx(0.135)

    def test_hole_out_of_range(self):
        with pytest.raises(ConfigError):
            SceneSpec(hole_diameter=0.5)

    def test_collar_wider_than_cone(self):
        with pytest.raises(ConfigError):
            SceneSpec(cone_base_radius=0.1)

    def test_bad_pit(self):
        with pytest.raises(ConfigError):
            SceneSpec(pits=(Pit(0.0, -0.05, 0.1),))


class TestSurface:
    def test_labels(self):
        rim = (SPEC.collar_radius, 0.0, SPEC.cone_height)
        mid_flank = ((SPEC.collar_radius + SPEC.cone_base_radius) / 2.0, 0.0, SPEC.cone_height / 2.0)
        shaft_floor = (0.0, 0.0, -SPEC.neck_depth)
        ground = (2.0, 1.0, 0.0)
        labels = SCENE.label([rim, mid_flank, shaft_floor, ground])
        np.testing.assert_array_equal(
            labels, [PointLabel.cone, PointLabel.cone, PointLabel.hole_wall, PointLabel.ground]
        )

    def test_funnel_wall(self):
        z = (SPEC.cone_height - SPEC.neck_depth) / 2.0
        rho = (SPEC.hole_radius + SPEC.collar_radius) / 2.0
        assert SCENE.label([(0.0, rho, z)])[0] == PointLabel.hole_wall

    def test_signed_distance_off_the_cone(self):
        np.testing.assert_allclose(SCENE.signed_distance([(5.0, 0.0, 1.0), (5.0, 0.0, -0.5)]), [1.0, -0.5])

    def test_profile_height(self):
        assert SCENE.profile_height(0.0) == pytest.approx(-SPEC.neck_depth)
        assert SCENE.profile_height(SPEC.collar_radius) == pytest.approx(SPEC.cone_height)
        assert SCENE.profile_height(3.0) == pytest.approx(0.0)

    def test_pits(self):
        spec = SceneSpec(pits=(Pit(90.0, 0.05, 0.1),))
        scene = generate(spec)
        centre, radius = pit_sphere(spec, spec.pits[0])
        assert radius == pytest.approx((0.1**2 + 0.05**2) / 0.1)
        assert scene.label([centre - (0.0, 0.0, radius)])[0] == PointLabel.pit
        assert len(generate(SceneSpec(pits=spec.pits, pits_enabled=False)).pit_radii) == 0


class TestBeams:
    def test_pattern_sizes(self):
        assert len(beam_directions(BeamPattern.sparse())) == 32 * 1800
        assert len(beam_directions(BeamPattern.dense())) == 128 * 1024

    def test_unit_directions(self):
        directions = beam_directions(BeamPattern.dense(azimuth_step=2.0))
        np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0)
        assert directions[:, 2].max() <= 1e-12

    def test_sensor_mount(self):
        pose = sensor_pose_for(RobotPose(1.0, 2.0, 0.3), 1.3)
        np.testing.assert_allclose(pose.translation, [1.0, 2.0, 1.3])


class TestScan:
    def test_nadir_beam_escapes_down_the_shaft(self):
        result = scan(SCENE, RobotPose(), NADIR, mount_height=1.3)
        assert len(result.cloud) == 0

    def test_exact_ground_hit(self):
        scene = generate(SceneSpec(centre=(10.0, 0.0), surface_jitter=0.0))
        beam = BeamPattern(1, 0.0, 1.0, elevation_center=-45.0, azimuth_fov=0.0, range_noise=0.0)
        result = scan(scene, RobotPose(), beam, mount_height=1.3)
        assert len(result.cloud) == 1
        np.testing.assert_allclose(result.cloud.points[0], [1.3, 0.0, 0.0], atol=2e-4)
        assert result.labels[0] == PointLabel.ground

    def test_hole_centre_in_shadow_frame(self):
        beam = BeamPattern(1, 0.0, 1.0, elevation_center=-45.0, azimuth_fov=0.0)
        result = scan(SCENE, RobotPose(0.0, -2.0, np.pi / 2), beam)
        assert result.cloud.frame is Frame.body
        np.testing.assert_allclose(result.hole_centre, [2.0, 0.0, 0.0], atol=1e-9)

    def test_seeded_scans_repeat(self):
        pattern = BeamPattern.sparse(azimuth_step=1.0)
        first = scan(SCENE, RobotPose(-2.0, 0.0), pattern, seed=4)
        second = scan(SCENE, RobotPose(-2.0, 0.0), pattern, seed=4)
        other = scan(SCENE, RobotPose(-2.0, 0.0), pattern, seed=5)
        np.testing.assert_array_equal(first.cloud.points, second.cloud.points)
        np.testing.assert_array_equal(first.labels, second.labels)
        assert not np.array_equal(first.cloud.points, other.cloud.points)

    def test_returns_lie_on_the_surface(self):
        scene = generate(SceneSpec(surface_jitter=0.0))
        pose = RobotPose(-1.5, 0.0)
        pattern = BeamPattern.dense(azimuth_step=0.5)
        result = scan(scene, pose, pattern, seed=1)
        assert (result.labels == PointLabel.cone).sum() > 100
        world = result.cloud.points + pose.position
        assert np.abs(scene.signed_distance(world)).max() <= 6 * pattern.range_noise + 2e-4

    def test_funnel_occludes_oblique_views(self):
        elevation = np.degrees(np.arctan2(SPEC.cone_height - 1.3, 2.5))
        oblique = BeamPattern(21, 4.0, 0.25, elevation_center=elevation, azimuth_fov=10.0, range_noise=0.0)
        side = sensor_pose_for(RobotPose(-2.5, 0.0), 1.3)
        above = sensor_pose_for(RobotPose(), 1.3)
        assert funnel_return_fraction(SCENE, side, oblique) > 0.9
        assert funnel_return_fraction(SCENE, above, NADIR) == 0.0

    def test_no_beam_through_the_aperture(self):
        upward = BeamPattern(1, 0.0, 1.0, elevation_center=30.0, azimuth_fov=0.0)
        assert funnel_return_fraction(SCENE, sensor_pose_for(RobotPose(-2.0, 0.0)), upward) == 0.0
