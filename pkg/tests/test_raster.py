import numpy as np
import pytest

from blasthole.models.camera import CameraSettings, DepthImage, FilterConfig
from blasthole.models.raster import BinaryImage, GrayImage
from blasthole.services.camera import camera_pose_for
from blasthole.services.raster import binarize, close_and_blur, components, sobel, touches_border
from blasthole.utils.constants import Color
from blasthole.utils.exceptions import ConfigError


def depth_image(depth, valid, z_cam=1.0):
    height, width = depth.shape
    settings = CameraSettings(z_cam, 90.0, width, height)
    return DepthImage(np.where(valid, depth, np.inf), valid, settings, camera_pose_for(np.zeros(3), settings))


def disk(shape, centre, radius):
    rows, cols = np.indices(shape)
    return np.hypot(cols - centre[0], rows - centre[1]) <= radius


class TestCloseAndBlur:
    def test_checkerboard_is_filled(self):
        valid = (np.indices((8, 8)).sum(axis=0) % 2).astype(bool)
        gray = close_and_blur(depth_image(np.ones((8, 8)), valid), FilterConfig(3, 1, 0.0, 0.05))
        assert gray.valid.all()
        np.testing.assert_allclose(gray.values, 1.0)

    def test_unit_kernels_are_identity(self, rng):
        valid = rng.uniform(size=(16, 16)) > 0.3
        image = depth_image(rng.uniform(0.5, 1.0, (16, 16)), valid)
        gray = close_and_blur(image, FilterConfig(1, 1, 0.0, 0.05))
        np.testing.assert_array_equal(gray.valid, valid)
        np.testing.assert_array_equal(gray.values[valid], image.depth[valid])

    def test_dense_image_only_blurs(self):
        rows, cols = np.indices((32, 32))
        depth = 1.0 + 0.001 * (rows + cols)
        gray = close_and_blur(depth_image(depth, np.ones((32, 32), dtype=bool)), FilterConfig(3, 5, 1.0, 0.05))
        assert gray.valid.all()
        assert np.abs(gray.values - depth).max() < 0.01

    def test_closing_is_idempotent_on_the_mask(self, rng):
        valid = rng.uniform(size=(40, 40)) > 0.6
        f = FilterConfig(5, 1, 0.0, 0.05)
        once = close_and_blur(depth_image(np.ones((40, 40)), valid), f)
        twice = close_and_blur(depth_image(once.values, once.valid), f)
        np.testing.assert_array_equal(twice.valid, once.valid)

    def test_kernel_larger_than_image(self):
        with pytest.raises(ConfigError):
            close_and_blur(depth_image(np.ones((8, 8)), np.ones((8, 8), dtype=bool)), FilterConfig(9, 1, 0.0, 0.05))


class TestBinarize:
    def gray(self, values, valid):
        settings = CameraSettings(1.0, 90.0, values.shape[1], values.shape[0])
        return GrayImage(values, valid, settings, camera_pose_for(np.zeros(3), settings))

    def test_solid_ground_is_white(self):
        binary = binarize(self.gray(np.ones((20, 20)), np.ones((20, 20), dtype=bool)), 0.05)
        assert binary.mask.all()

    def test_empty_image_is_black(self):
        binary = binarize(self.gray(np.full((20, 20), np.inf), np.zeros((20, 20), dtype=bool)), 0.05)
        assert not binary.mask.any()

    def test_below_ground_is_black(self):
        values = np.ones((20, 20))
        values[8:12, 8:12] = 1.3
        binary = binarize(self.gray(values, np.ones((20, 20), dtype=bool)), 0.05)
        assert not binary.mask[8:12, 8:12].any()
        assert binary.mask[0, 0]

    def test_steep_drop_from_the_surface_is_black(self):
        values = np.full((30, 30), 0.7)
        values[13:17, 13:17] = 0.95
        binary = binarize(self.gray(values, np.ones((30, 30), dtype=bool)), 0.05, surface_kernel=9)
        assert not binary.mask[15, 15]
        assert binary.mask[2, 2]


class TestSobel:
    def test_constant_image(self):
        grad = sobel(GrayImage(np.full((16, 16), 3.0), np.ones((16, 16), dtype=bool)))
        assert not grad.magnitude.any()

    def test_vertical_step_edge(self):
        values = np.zeros((16, 16))
        values[:, 8:] = 1.0
        grad = sobel(GrayImage(values, np.ones_like(values, dtype=bool)))
        edge = grad.magnitude > 0
        assert edge[5, 7] and edge[5, 8]
        np.testing.assert_allclose(grad.gx[edge], 1.0)
        np.testing.assert_allclose(grad.gy[edge], 0.0)

    def test_disk_edge_ring(self):
        shape, centre, radius = (32, 32), (16.0, 16.0), 8.0
        values = disk(shape, centre, radius).astype(float)
        grad = sobel(GrayImage(values, np.ones(shape, dtype=bool)))
        rows, cols = np.nonzero(grad.magnitude == grad.magnitude.max())
        assert np.all(np.abs(np.hypot(cols - centre[0], rows - centre[1]) - radius) <= 1.5)

    def test_borders_are_zero(self, rng):
        grad = sobel(GrayImage(rng.uniform(size=(12, 12)), np.ones((12, 12), dtype=bool)))
        assert not grad.magnitude[0].any() and not grad.magnitude[-1].any()
        assert not grad.magnitude[:, 0].any() and not grad.magnitude[:, -1].any()

    def test_directions_are_unit(self, rng):
        grad = sobel(GrayImage(rng.uniform(size=(20, 20)), np.ones((20, 20), dtype=bool)))
        moving = grad.magnitude > 0
        np.testing.assert_allclose(np.hypot(grad.gx[moving], grad.gy[moving]), 1.0)

    def test_mirror_symmetry(self, rng):
        values = rng.uniform(size=(20, 20))
        grad = sobel(GrayImage(values, np.ones((20, 20), dtype=bool)))
        mirrored = sobel(GrayImage(np.fliplr(values), np.ones((20, 20), dtype=bool)))
        np.testing.assert_allclose(mirrored.magnitude, np.fliplr(grad.magnitude), atol=1e-12)
        np.testing.assert_allclose(mirrored.gx, -np.fliplr(grad.gx), atol=1e-12)

    def test_ridge_is_one_pixel_across(self):
        shape, centre, radius = (48, 48), (24.0, 24.0), 12.0
        grad = sobel(BinaryImage(~disk(shape, centre, radius)).to_gray(1.0))
        edges, ridge = grad.edge_pixels(0.05), grad.ridge_pixels(0.05)
        distance = np.hypot(ridge[:, 0] - centre[0], ridge[:, 1] - centre[1])
        assert np.all(np.abs(distance - radius) <= 1.5)
        assert len(ridge) < len(edges) / 2
        angles = np.arctan2(ridge[:, 1] - centre[1], ridge[:, 0] - centre[0])
        sectors = np.floor((angles + np.pi) / np.radians(10.0)) % 36
        assert len(np.unique(sectors)) == 36

    def test_ridge_of_a_blank_image(self):
        grad = sobel(GrayImage(np.zeros((8, 8)), np.ones((8, 8), dtype=bool)))
        assert grad.ridge_pixels(0.05).shape == (0, 2)


class TestComponents:
    def test_single_disk(self):
        blobs = components(BinaryImage(disk((40, 40), (20.0, 18.0), 6.0)), Color.white)
        assert len(blobs) == 1
        assert np.hypot(blobs[0].centroid[0] - 20.0, blobs[0].centroid[1] - 18.0) <= 0.5

    def test_two_disks(self):
        mask = disk((40, 60), (12.0, 20.0), 6.0) | disk((40, 60), (45.0, 20.0), 8.0)
        blobs = components(BinaryImage(mask), Color.white)
        assert len(blobs) == 2
        assert blobs[0].area > blobs[1].area
        assert blobs[0].centroid[0] == pytest.approx(45.0, abs=0.5)

    def test_areas_partition_each_colour(self, rng):
        binary = BinaryImage(rng.uniform(size=(30, 30)) > 0.5)
        for color, count in ((Color.white, binary.mask.sum()), (Color.black, (~binary.mask).sum())):
            assert sum(blob.area for blob in components(binary, color)) == count

    def test_cone_with_a_central_void(self):
        shape = (60, 60)
        mask = disk(shape, (30.0, 30.0), 20.0) & ~disk(shape, (30.0, 30.0), 5.0)
        binary = BinaryImage(mask)
        cone = components(binary, Color.white)[0]
        voids = [blob for blob in components(binary, Color.black) if not touches_border(blob, shape)]
        assert len(voids) == 1
        assert cone.encloses(voids[0])
        assert voids[0].centroid == pytest.approx((30.0, 30.0))

    def test_blank_image(self):
        assert components(BinaryImage(np.zeros((10, 10), dtype=bool)), Color.white) == []
