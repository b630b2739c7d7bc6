import numpy as np
from scipy.special import expit

from blasthole.models.camera import CameraSettings, DepthImage, FilterConfig
from blasthole.models.geometry import RigidTransform, as_vec3
from blasthole.utils.constants import CAMERA_SCALE_FLOOR, IMAGE_HEIGHT, IMAGE_WIDTH, Frame
from blasthole.utils.exceptions import ConfigError, InvalidInputError
from blasthole.utils.logger import logger

# Camera x follows Shadow x; y and z are flipped so the optical axis points down
CAMERA_AXES = np.diag([1.0, -1.0, -1.0])


def nearest_odd(value):
    return int(2 * np.floor((value - 1.0) / 2.0 + 0.5) + 1)


def interpolate_lut(distance, lut):
    """
    Linear interpolation of the look-up table, clamped at both ends.

    Returns:
        (z_cam, fov, FilterConfig) before cone-height scaling
    """
    if lut is None or len(lut) == 0:
        raise ConfigError("Projection look-up table is empty")
    if distance < 0:
        raise InvalidInputError(f"Distance must be non-negative, got {distance}")

    distances = lut.column(lambda row: row.distance)

    def at(getter):
        return float(np.interp(distance, distances, lut.column(getter)))

    filter_config = FilterConfig(
        morph_kernel=nearest_odd(at(lambda row: row.filter.morph_kernel)),
        blur_kernel=nearest_odd(at(lambda row: row.filter.blur_kernel)),
        blur_sigma=at(lambda row: row.filter.blur_sigma),
        binary_threshold=at(lambda row: row.filter.binary_threshold),
    )
    return at(lambda row: row.z_cam), at(lambda row: row.fov), filter_config


def height_factor(h):
    """Camera-height multiplier for a cone of height h; bounded to [0.6, 1)"""
    if h < 0:
        raise InvalidInputError(f"Cone height must be non-negative, got {h}")
    return max(1.0 - 0.9 * float(expit(-(6.25 * h - 2.88))), CAMERA_SCALE_FLOOR)


def scale_camera_height(z_cam, h):
    return z_cam * height_factor(h)


def settings_for(distance, cone_height, lut, width=IMAGE_WIDTH, height=IMAGE_HEIGHT):
    """
    Camera and filter settings for the current target distance and cone height.

    Args:
        distance: Horizontal robot-to-cone distance in meters
        cone_height: Cone height in meters
        lut: ProjectionLUT

    Returns:
        (CameraSettings, FilterConfig)
    """
    z_cam, fov, filter_config = interpolate_lut(distance, lut)
    settings = CameraSettings(scale_camera_height(z_cam, cone_height), fov, width, height)
    logger.debug(
        f"Camera for d={distance:.2f} m h={cone_height:.2f} m: "
        f"z_cam={settings.z_cam:.3f} fov={fov:.1f} morph={filter_config.morph_kernel}"
    )
    return settings, filter_config


def camera_pose_for(ground_point, settings):
    """Camera -> Shadow transform for a camera z_cam above ground_point"""
    position = as_vec3(ground_point) + np.array([0.0, 0.0, settings.z_cam])
    return RigidTransform(CAMERA_AXES, position, Frame.camera, Frame.shadow)


def project_points(points, settings, camera_pose):
    """Continuous pinhole coordinates (u, v, depth) of Shadow-frame points"""
    local = camera_pose.inverse().apply(np.asarray(points, dtype=float).reshape(-1, 3))
    depth = local[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = settings.cx + settings.focal * local[:, 0] / depth
        v = settings.cy + settings.focal * local[:, 1] / depth
    return u, v, depth


def project(cloud, ground_point, settings):
    """
    Render a cloud into a depth image seen from straight above ground_point.

    The z-buffer keeps the smallest camera depth per pixel; ties go to the
    point that comes first in the cloud.
    """
    camera_pose = camera_pose_for(ground_point, settings)
    depth = np.full(settings.shape, np.inf)
    valid = np.zeros(settings.shape, dtype=bool)

    if len(cloud):
        u, v, z = project_points(cloud.points, settings, camera_pose)
        cols = np.floor(u + 0.5)
        rows = np.floor(v + 0.5)
        visible = (
            (z > 0)
            & (cols >= 0)
            & (cols < settings.width)
            & (rows >= 0)
            & (rows < settings.height)
        )
        order_index = np.flatnonzero(visible)
        flat = rows[visible].astype(int) * settings.width + cols[visible].astype(int)
        z = z[visible]

        order = np.lexsort((order_index, z))
        pixels, first = np.unique(flat[order], return_index=True)
        depth.flat[pixels] = z[order][first]
        valid.flat[pixels] = True

    image = DepthImage(depth, valid, settings, camera_pose)
    logger.debug(f"Projected {len(cloud)} points into {image.valid_count} valid pixels")
    return image


def back_project(pixel, depth, settings, camera_pose):
    """
    Shadow-frame point seen at a (sub-)pixel position and camera depth.

    Raises:
        InvalidInputError: pixel outside the raster or non-positive depth
    """
    u, v = float(pixel[0]), float(pixel[1])
    if not (-0.5 <= u < settings.width - 0.5 and -0.5 <= v < settings.height - 0.5):
        raise InvalidInputError(f"Pixel ({u}, {v}) is outside the image")
    if not depth > 0 or not np.isfinite(depth):
        raise InvalidInputError(f"Depth must be finite and positive, got {depth}")
    local = np.array(
        [(u - settings.cx) * depth / settings.focal, (v - settings.cy) * depth / settings.focal, depth]
    )
    return camera_pose.apply(local)


def hole_pixel_radii(settings, ground_depth, cone_height, hole_cfg):
    """Pixel radii of the smallest and largest admissible holes, seen at collar depth"""
    collar_depth = max(ground_depth - cone_height, 0.1 * ground_depth)
    scale = settings.focal / collar_depth
    return hole_cfg.radius_min * scale, hole_cfg.radius_max * scale


def ring_depth(image, circle, ring_width, fallback):
    """Median valid depth in a thin ring just outside a pixel circle"""
    rows, cols = np.indices(image.depth.shape)
    distance = np.hypot(cols - circle.a, rows - circle.b)
    ring = (distance > circle.r + 1.0) & (distance <= circle.r + 1.0 + ring_width) & image.valid
    if not ring.any():
        return fallback
    return float(np.median(image.depth[ring]))


def metric_radius(image, circle, ring_width, fallback_depth):
    """Convert a pixel radius to meters at the depth of the surrounding collar"""
    depth = ring_depth(image, circle, ring_width, fallback_depth)
    return circle.r * depth / image.settings.focal
