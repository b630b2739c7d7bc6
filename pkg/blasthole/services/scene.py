from dataclasses import dataclass
from typing import Tuple

import numpy as np

from blasthole.models.cloud import PointCloud
from blasthole.models.geometry import RigidTransform
from blasthole.models.scene import ScanResult
from blasthole.services.geometry import pose_transform, rotation_from_euler, shadow_transform
from blasthole.utils.constants import (
    MOUNT_HEIGHT,
    SPHERE_TRACE_EPS,
    SPHERE_TRACE_MAX_STEPS,
    Frame,
    PointLabel,
)
from blasthole.utils.exceptions import ConfigError
from blasthole.utils.logger import logger

GROUND_EXTENT = 1.0e4  # in meters
PIT_FLANK_FRACTION = 0.7
MIN_COLLAR_STEP = 1.0e-4  # in meters

# meridian segments, in tie-break order
FLANK, GROUND, FUNNEL, FLOOR = range(4)
SEGMENT_LABELS = {
    FLANK: PointLabel.cone,
    GROUND: PointLabel.ground,
    FUNNEL: PointLabel.hole_wall,
    FLOOR: PointLabel.hole_wall,
}


@dataclass(frozen=True)
class Scene:
    """
    Implicit description of an axisymmetric bench scene.

    The surface is a meridian polyline (rho, z) revolved about the hole axis:
    the aperture floor at -neck (hits there escape down the shaft), the
    funnel up to the collar rim, the cone flank down to its base, then the
    ground plane. Pits are spheres subtracted from the material.
    """

    spec: object
    segments: Tuple[Tuple[Tuple[float, float], Tuple[float, float]], ...]
    pit_centres: np.ndarray
    pit_radii: np.ndarray

    @property
    def centre(self):
        return np.asarray(self.spec.centre, dtype=float)

    def meridian(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        rho = np.hypot(points[:, 0] - self.centre[0], points[:, 1] - self.centre[1])
        return np.column_stack([rho, points[:, 2]])

    def profile_height(self, rho):
        """Surface height of the revolved profile at radial distance rho"""
        (_, floor_end), (_, funnel_end), (_, flank_end) = (
            self.segments[FLOOR],
            self.segments[FUNNEL],
            self.segments[FLANK],
        )
        xs = [0.0, floor_end[0], funnel_end[0], flank_end[0], GROUND_EXTENT]
        zs = [floor_end[1], floor_end[1], funnel_end[1], flank_end[1], 0.0]
        return np.interp(rho, xs, zs)

    def segment_distances(self, q):
        distances = np.empty((len(q), len(self.segments)))
        for index, (start, end) in enumerate(self.segments):
            a = np.asarray(start)
            ab = np.asarray(end) - a
            t = np.clip(((q - a) @ ab) / (ab @ ab), 0.0, 1.0)
            distances[:, index] = np.hypot(*(q - (a + t[:, None] * ab)).T)
        return distances

    def pit_distances(self, points):
        if len(self.pit_radii) == 0:
            return np.full((len(points), 0), np.inf)
        offsets = points[:, None, :] - self.pit_centres[None, :, :]
        return np.linalg.norm(offsets, axis=2) - self.pit_radii[None, :]

    def signed_distance(self, points):
        """Negative inside material; exact for the revolved profile, a bound once pits are cut"""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        q = self.meridian(points)
        distance = self.segment_distances(q).min(axis=1)
        below = q[:, 1] < self.profile_height(q[:, 0])
        sdf = np.where(below, -distance, distance)
        pits = self.pit_distances(points)
        if pits.shape[1]:
            sdf = np.maximum(sdf, -pits.min(axis=1))
        return sdf

    def nearest_segment(self, points):
        return np.argmin(self.segment_distances(self.meridian(points)), axis=1)

    def label(self, points, tol=1.0e-3):
        """Ground-truth surface label of points lying on (or near) the surface"""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        segment = self.nearest_segment(points)
        labels = np.array([SEGMENT_LABELS[s] for s in segment], dtype=np.uint8).reshape(-1)
        pits = self.pit_distances(points)
        if pits.shape[1]:
            labels[pits.min(axis=1) <= tol] = PointLabel.pit
        return labels


def pit_sphere(spec, pit):
    """Centre and radius of the sphere that cuts a cap of pit.radius x pit.depth into the flank"""
    r_c, big_r, h = spec.collar_radius, spec.cone_base_radius, spec.cone_height
    rho = r_c + PIT_FLANK_FRACTION * (big_r - r_c)
    z = h * (big_r - rho) / (big_r - r_c)
    length = np.hypot(big_r - r_c, h)
    normal_rho, normal_z = h / length, (big_r - r_c) / length

    radius = (pit.radius**2 + pit.depth**2) / (2.0 * pit.depth)
    lift = radius - pit.depth
    bearing = np.radians(pit.bearing)
    radial = np.array([np.cos(bearing), np.sin(bearing)])
    centre_xy = np.asarray(spec.centre) + (rho + normal_rho * lift) * radial
    return np.array([centre_xy[0], centre_xy[1], z + normal_z * lift]), radius


def generate(spec):
    """
    Build the implicit scene for a spec.

    Raises:
        ConfigError: the spec cannot be realised
    """
    r_h = spec.hole_radius
    r_c = max(spec.collar_radius, r_h + MIN_COLLAR_STEP)
    if r_c >= spec.cone_base_radius:
        raise ConfigError("Collar must be narrower than the cone base")

    floor = ((0.0, -spec.neck_depth), (r_h, -spec.neck_depth))
    funnel = ((r_h, -spec.neck_depth), (r_c, spec.cone_height))
    flank = ((r_c, spec.cone_height), (spec.cone_base_radius, 0.0))
    ground = ((spec.cone_base_radius, 0.0), (GROUND_EXTENT, 0.0))
    segments = [None] * 4
    segments[FLOOR], segments[FUNNEL], segments[FLANK], segments[GROUND] = floor, funnel, flank, ground

    pits = spec.pits if spec.pits_enabled else ()
    spheres = [pit_sphere(spec, pit) for pit in pits]
    centres = np.array([centre for centre, _ in spheres]).reshape(-1, 3)
    radii = np.array([radius for _, radius in spheres])
    return Scene(spec, tuple(segments), centres, radii)


def beam_directions(pattern):
    """Unit beam directions in the sensor frame, channel-major then azimuth-minor"""
    if pattern.channels == 1:
        elevations = np.array([pattern.elevation_center])
    else:
        half = pattern.vertical_fov / 2.0
        elevations = np.linspace(pattern.elevation_center - half, pattern.elevation_center + half, pattern.channels)

    steps = int(round(pattern.azimuth_fov / pattern.azimuth_step))
    if pattern.azimuth_fov >= 360.0:
        azimuths = -180.0 + pattern.azimuth_step * np.arange(steps)
    else:
        azimuths = np.linspace(-pattern.azimuth_fov / 2.0, pattern.azimuth_fov / 2.0, steps + 1)

    el, az = np.meshgrid(np.radians(elevations), np.radians(azimuths), indexing="ij")
    directions = np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)
    return directions.reshape(-1, 3)


def sphere_trace(scene, origin, directions, max_range):
    """
    March every ray to its first surface crossing.

    Returns:
        (ranges, hit mask); ranges are meaningful only where hit
    """
    ranges = np.zeros(len(directions))
    hit = np.zeros(len(directions), dtype=bool)
    active = np.arange(len(directions))
    for _ in range(SPHERE_TRACE_MAX_STEPS):
        if len(active) == 0:
            break
        points = origin + ranges[active, None] * directions[active]
        distance = scene.signed_distance(points)
        landed = distance < SPHERE_TRACE_EPS
        hit[active[landed]] = True
        ranges[active[~landed]] += distance[~landed]
        active = active[~landed & (ranges[active] <= max_range)]
    return ranges, hit & (ranges <= max_range)


def raycast(scene, sensor_pose, pattern, seed=0):
    """
    Cast a beam pattern from a sensor pose.

    Beams that reach the aperture floor escape down the shaft and give no
    return. Returned points carry Gaussian range noise; cone and pit points
    additionally carry isotropic surface jitter.

    Args:
        scene: Scene
        sensor_pose: RigidTransform sensor -> world
        pattern: BeamPattern
        seed: Noise seed

    Returns:
        (PointCloud in the sensor pose's target frame, labels)
    """
    rng = np.random.default_rng(seed)
    directions = beam_directions(pattern) @ sensor_pose.rotation.T
    origin = sensor_pose.translation
    ranges, hit = sphere_trace(scene, origin, directions, pattern.max_range)
    range_noise = rng.normal(0.0, pattern.range_noise, len(directions)) if pattern.range_noise > 0 else 0.0

    exact = origin + ranges[:, None] * directions
    escaped = hit.copy()
    escaped[hit] = scene.nearest_segment(exact[hit]) == FLOOR
    keep = hit & ~escaped

    labels = scene.label(exact[keep])
    points = origin + (ranges + range_noise)[:, None] * directions
    points = points[keep]

    jitter = scene.spec.surface_jitter
    if jitter > 0:
        noise = rng.normal(0.0, jitter, points.shape)
        rough = (labels == PointLabel.cone) | (labels == PointLabel.pit)
        points[rough] += noise[rough]

    logger.debug(f"Raycast {len(directions)} beams: {int(keep.sum())} returns, {int(escaped.sum())} escaped")
    return PointCloud(points, sensor_pose.target or Frame.utm, labels), labels


def sensor_pose_for(robot_pose, mount_height=MOUNT_HEIGHT):
    """Sensor -> world transform; the sensor sits mount_height above the Body origin"""
    rotation = rotation_from_euler(robot_pose.roll, robot_pose.pitch, robot_pose.yaw)
    origin = robot_pose.position + rotation @ np.array([0.0, 0.0, mount_height])
    return RigidTransform(rotation, origin, Frame.sensor, Frame.utm)


def scan(scene, robot_pose, pattern, seed=0, mount_height=MOUNT_HEIGHT):
    """
    Scan a scene from a robot pose.

    Returns:
        ScanResult with a Body-frame cloud, labels and the true hole centre in
        the robot's Shadow frame
    """
    sensor_pose = sensor_pose_for(robot_pose, mount_height)
    world_cloud, labels = raycast(scene, sensor_pose, pattern, seed)
    body_from_world = pose_transform(robot_pose).inverse()
    body_points = body_from_world.apply(world_cloud.points)

    shadow_from_world = shadow_transform(robot_pose) @ body_from_world
    truth = shadow_from_world.apply(np.array([scene.centre[0], scene.centre[1], 0.0]))
    return ScanResult(
        cloud=PointCloud(body_points, Frame.body, labels),
        labels=labels,
        hole_centre=truth,
        sensor_origin=sensor_pose.translation,
    )


def aperture_rays(scene, sensor_pose, pattern):
    """Mask of beams that cross the collar opening at rim height"""
    directions = beam_directions(pattern) @ sensor_pose.rotation.T
    origin = sensor_pose.translation
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (scene.spec.cone_height - origin[2]) / directions[:, 2]
    crossing = origin + t[:, None] * directions
    rho = np.hypot(crossing[:, 0] - scene.centre[0], crossing[:, 1] - scene.centre[1])
    return (t > 0) & (rho < scene.spec.collar_radius)


def funnel_return_fraction(scene, sensor_pose, pattern):
    """Fraction of aperture beams that come back from the funnel wall"""
    entering = aperture_rays(scene, sensor_pose, pattern)
    if not entering.any():
        return 0.0
    directions = beam_directions(pattern) @ sensor_pose.rotation.T
    ranges, hit = sphere_trace(scene, sensor_pose.translation, directions[entering], pattern.max_range)
    exact = sensor_pose.translation + ranges[:, None] * directions[entering]
    returned = hit.copy()
    returned[hit] = scene.nearest_segment(exact[hit]) == FUNNEL
    return float(returned.mean())
