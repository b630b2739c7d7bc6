from dataclasses import dataclass, field, replace
from typing import Tuple

from blasthole.models.camera import FilterConfig, LutRow, ProjectionLUT
from blasthole.models.cloud import CorridorSpec
from blasthole.models.detection import FrstConfig, NmsConfig, RansacConfig
from blasthole.models.mission import MissionConfig
from blasthole.utils.constants import (
    CLUSTER_CELL,
    CLUSTER_MIN_POINTS,
    COARSE_CENTRALITY,
    COARSE_MIN_AREA_FACTOR,
    DENOISE_MIN_NEIGHBORS,
    DENOISE_RADIUS,
    EDGE_SMOOTHING,
    FINE_STAGE_DISTANCE,
    GROUND_NORMAL,
    GROUND_TOLERANCE,
    HOLE_DIAMETER_MAX,
    HOLE_DIAMETER_MIN,
    IMAGE_HEIGHT,
    IMAGE_WIDTH,
    LIDAR_HYSTERESIS,
    LIDAR_SWITCH_DISTANCE,
    MOUNT_HEIGHT,
    PROJECTION_LUT,
    RING_WIDTH,
    SURFACE_KERNEL,
    TRACK_LOST_FRAMES,
    VOXEL_XY,
    Z_THRESHOLD,
)


def default_lut():
    return ProjectionLUT(
        tuple(
            LutRow(distance, z_cam, fov, FilterConfig(morph, blur, sigma, threshold))
            for distance, z_cam, fov, morph, blur, sigma, threshold in PROJECTION_LUT
        )
    )


@dataclass(frozen=True)
class GeometryConfig:
    ground_normal: Tuple[float, float, float] = GROUND_NORMAL
    mount_height: float = MOUNT_HEIGHT


@dataclass(frozen=True)
class ConeConfig:
    corridor: CorridorSpec = field(default_factory=CorridorSpec)
    z_threshold: float = Z_THRESHOLD
    denoise_radius: float = DENOISE_RADIUS
    denoise_min_neighbors: int = DENOISE_MIN_NEIGHBORS
    cluster_cell: float = CLUSTER_CELL
    cluster_min_points: int = CLUSTER_MIN_POINTS
    voxel_xy: float = VOXEL_XY


@dataclass(frozen=True)
class CameraConfig:
    width: int = IMAGE_WIDTH
    height: int = IMAGE_HEIGHT
    lut: ProjectionLUT = field(default_factory=default_lut)
    ground_tolerance: float = GROUND_TOLERANCE
    surface_kernel: int = SURFACE_KERNEL
    edge_smoothing: float = EDGE_SMOOTHING
    ring_width: int = RING_WIDTH


@dataclass(frozen=True)
class TrackingConfig:
    fine_stage_distance: float = FINE_STAGE_DISTANCE
    lidar_switch_distance: float = LIDAR_SWITCH_DISTANCE
    lidar_hysteresis: float = LIDAR_HYSTERESIS
    track_lost_frames: int = TRACK_LOST_FRAMES
    coarse_min_area_factor: float = COARSE_MIN_AREA_FACTOR
    coarse_centrality: float = COARSE_CENTRALITY


@dataclass(frozen=True)
class HoleConfig:
    diameter_min: float = HOLE_DIAMETER_MIN
    diameter_max: float = HOLE_DIAMETER_MAX

    @property
    def radius_min(self):
        return self.diameter_min / 2.0

    @property
    def radius_max(self):
        return self.diameter_max / 2.0


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the detection pipeline and mission simulator"""

    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    cone: ConeConfig = field(default_factory=ConeConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    frst: FrstConfig = field(default_factory=FrstConfig)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    nms: NmsConfig = field(default_factory=NmsConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    hole: HoleConfig = field(default_factory=HoleConfig)
    mission: MissionConfig = field(default_factory=MissionConfig)
    seed: int = 0

    def with_seed(self, seed):
        return replace(self, seed=seed, ransac=replace(self.ransac, rng_seed=seed))
