import numpy as np
import pytest

from blasthole.models.detection import FrstConfig
from blasthole.models.raster import BinaryImage
from blasthole.services.frst import affected_pixels, extract_rois, feature_count, frst, radii_for, round_half_away
from blasthole.services.raster import sobel
from blasthole.utils.exceptions import ConfigError, InvalidInputError

RING_CONFIG = FrstConfig(radii=radii_for(7.0, 9.0, FrstConfig()))


def dark_disks(shape, centres, radius=8.0):
    """Bright face with dark disks; True = material"""
    rows, cols = np.indices(shape)
    mask = np.ones(shape, dtype=bool)
    for u, v in centres:
        mask &= np.hypot(cols - u, rows - v) > radius
    return BinaryImage(mask)


def gradient_of(binary):
    return sobel(binary.to_gray(1.0))


def peak_of(maps):
    v, u = np.unravel_index(np.argmax(maps.symmetry), maps.symmetry.shape)
    return np.array([u, v], dtype=float)


class TestAffectedPixels:
    def test_axis_aligned(self):
        assert affected_pixels((10, 10), (1.0, 0.0), 3) == ((13, 10), (7, 10))

    def test_diagonal_rounds_to_nearest(self):
        g = (np.sqrt(0.5), np.sqrt(0.5))
        assert affected_pixels((10, 10), g, 2) == ((11, 11), (9, 9))

    def test_zero_radius(self):
        assert affected_pixels((4, 9), (0.0, 1.0), 0) == ((4, 9), (4, 9))

    def test_half_rounds_away_from_zero(self):
        assert affected_pixels((10, 10), (1.0, 0.0), 2.5) == ((13, 10), (7, 10))
        np.testing.assert_array_equal(round_half_away([-2.5, -0.5, 0.5, 1.49]), [-3, -1, 1, 1])

    def test_non_unit_gradient(self):
        with pytest.raises(InvalidInputError):
            affected_pixels((0, 0), (1.0, 1.0), 2)


class TestRadii:
    def test_sweep_around_admissible_radii(self):
        radii = radii_for(10.0, 15.0, FrstConfig())
        assert len(radii) == 5
        assert radii[0] == pytest.approx(8.0)
        assert radii[-1] == pytest.approx(18.0)
        assert list(radii) == sorted(radii)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            FrstConfig(alpha=0.5)
        with pytest.raises(ConfigError):
            FrstConfig(radii=(5.0, 3.0))
        with pytest.raises(ConfigError):
            FrstConfig(radii=(0.0, 3.0))


class TestFrst:
    def test_ring_peak_at_centre(self):
        maps = frst(gradient_of(dark_disks((64, 64), [(30, 30)])), RING_CONFIG)
        assert maps.symmetry.shape == (64, 64)
        assert np.isfinite(maps.symmetry).all()
        assert np.hypot(*(peak_of(maps) - [30.0, 30.0])) <= 1.0

    def test_constant_image_gives_zero_maps(self):
        maps = frst(gradient_of(BinaryImage(np.ones((32, 32), dtype=bool))), RING_CONFIG)
        assert not maps.symmetry.any()
        assert all(not o_n.any() for o_n in maps.orientation)

    def test_per_radius_maps(self):
        maps = frst(gradient_of(dark_disks((48, 48), [(24, 24)])), RING_CONFIG)
        assert maps.radii == RING_CONFIG.radii
        assert len(maps.orientation) == len(maps.magnitude) == len(RING_CONFIG.radii)

    def test_dark_centre_collects_negative_votes(self):
        maps = frst(gradient_of(dark_disks((48, 48), [(24, 24)])), RING_CONFIG)
        for o_n in maps.orientation:
            assert o_n[20:29, 20:29].sum() < 0

    def test_translation_moves_the_peak(self):
        base = peak_of(frst(gradient_of(dark_disks((64, 64), [(24, 24)])), RING_CONFIG))
        moved = peak_of(frst(gradient_of(dark_disks((64, 64), [(29, 27)])), RING_CONFIG))
        np.testing.assert_array_equal(moved - base, [5.0, 3.0])

    @pytest.mark.slow
    def test_rings_across_radii(self):
        rng = np.random.default_rng(4)
        located = 0
        for radius in rng.uniform(6.0, 40.0, 100):
            side = int(2 * radius + 40)
            centre = side / 2.0 + rng.uniform(-0.5, 0.5, 2)
            config = FrstConfig(radii=radii_for(radius, radius, FrstConfig()))
            maps = frst(gradient_of(dark_disks((side, side), [tuple(centre)], radius)), config)
            located += np.hypot(*(peak_of(maps) - centre)) <= 1.0
        assert located >= 98


class TestExtractRois:
    def test_single_circle(self):
        grad = gradient_of(dark_disks((64, 64), [(30, 30)]))
        rois = extract_rois(frst(grad, RING_CONFIG), grad, RING_CONFIG)
        assert len(rois) == 1
        roi = rois[0]
        assert np.hypot(roi.centre_hint[0] - 30.0, roi.centre_hint[1] - 30.0) <= 1.0
        assert roi.feature_count >= 1
        assert roi.source_radius in RING_CONFIG.radii

        angles = np.radians(np.arange(0.0, 360.0, 3.6))
        circumference = np.column_stack([30.0 + 8.0 * np.cos(angles), 30.0 + 8.0 * np.sin(angles)])
        gaps = np.hypot(*(circumference[:, None, :] - roi.pixels[None, :, :]).transpose(2, 0, 1)).min(axis=1)
        assert np.mean(gaps <= 1.5) >= 0.9

    def test_two_circles(self):
        grad = gradient_of(dark_disks((64, 96), [(24, 32), (70, 32)]))
        rois = extract_rois(frst(grad, RING_CONFIG), grad, RING_CONFIG)
        assert len(rois) == 2
        hints = sorted(roi.centre_hint for roi in rois)
        assert np.hypot(hints[0][0] - 24.0, hints[0][1] - 32.0) <= 1.0
        assert np.hypot(hints[1][0] - 70.0, hints[1][1] - 32.0) <= 1.0

    def test_circle_next_to_a_straight_edge(self):
        mask = dark_disks((64, 80), [(24, 32)]).mask
        mask[:, 60:] = False
        grad = gradient_of(BinaryImage(mask))
        rois = extract_rois(frst(grad, RING_CONFIG), grad, RING_CONFIG)
        assert len(rois) == 1
        assert np.hypot(rois[0].centre_hint[0] - 24.0, rois[0].centre_hint[1] - 32.0) <= 1.0

    def test_blank_map(self):
        grad = gradient_of(BinaryImage(np.ones((32, 32), dtype=bool)))
        assert extract_rois(frst(grad, RING_CONFIG), grad, RING_CONFIG) == []


class TestFeatureCount:
    def test_votes_at_the_hole(self):
        maps = frst(gradient_of(dark_disks((48, 48), [(24, 24)])), RING_CONFIG)
        count, radius = feature_count(maps, (24, 24), 1)
        assert count >= 1
        assert radius in RING_CONFIG.radii

    def test_no_votes_far_away(self):
        maps = frst(gradient_of(dark_disks((64, 64), [(16, 16)])), RING_CONFIG)
        assert feature_count(maps, (56, 56), 1) == (0, RING_CONFIG.radii[0])
