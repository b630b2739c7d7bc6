from dataclasses import dataclass, replace
from typing import Optional, Tuple

from blasthole.utils.constants import (
    COLLAR_CLEARANCE,
    HOLE_DIAMETER_MAX,
    HOLE_DIAMETER_MIN,
    NECK_DEPTH,
    RANGE_NOISE,
    SHAFT_DEPTH,
    SURFACE_JITTER,
)
from blasthole.utils.exceptions import ConfigError


@dataclass(frozen=True)
class Pit:
    """Sampling pit cut into the cone flank"""

    bearing: float  # in degrees, counter-clockwise from +x
    depth: float  # in meters
    radius: float  # cap radius on the flank, in meters


@dataclass(frozen=True)
class SceneSpec:
    """Axisymmetric bench scene: ground plane, drill-waste cone, funnel hole"""

    cone_base_radius: float = 0.9
    cone_height: float = 0.35
    hole_diameter: float = 0.27
    collar_diameter: Optional[float] = None
    neck_depth: float = NECK_DEPTH
    shaft_depth: float = SHAFT_DEPTH
    pits: Tuple[Pit, ...] = ()
    pits_enabled: bool = True
    centre: Tuple[float, float] = (0.0, 0.0)
    surface_jitter: float = SURFACE_JITTER
    seed: int = 0

    def __post_init__(self):
        if self.collar_diameter is None:
            object.__setattr__(self, "collar_diameter", self.hole_diameter + COLLAR_CLEARANCE)
        if not HOLE_DIAMETER_MIN - 1e-9 <= self.hole_diameter <= HOLE_DIAMETER_MAX + 1e-9:
            raise ConfigError(
                f"Hole diameter {self.hole_diameter} outside [{HOLE_DIAMETER_MIN}, {HOLE_DIAMETER_MAX}]"
            )
        if not self.hole_diameter <= self.collar_diameter <= 2 * self.cone_base_radius:
            raise ConfigError("Need hole diameter <= collar diameter <= cone base diameter")
        if self.cone_height <= 0 or self.neck_depth <= 0:
            raise ConfigError("Cone height and neck depth must be positive")
        for pit in self.pits:
            if pit.depth <= 0 or pit.radius <= 0:
                raise ConfigError("Pit depth and radius must be positive")

    @property
    def hole_radius(self):
        return self.hole_diameter / 2.0

    @property
    def collar_radius(self):
        return self.collar_diameter / 2.0

    def with_centre(self, centre):
        return replace(self, centre=tuple(centre))


@dataclass(frozen=True)
class BeamPattern:
    """Spinning LiDAR beam layout; elevation is measured from the horizontal"""

    channels: int
    vertical_fov: float  # in degrees
    azimuth_step: float  # in degrees
    max_range: float = 30.0  # in meters
    range_noise: float = RANGE_NOISE  # in meters
    elevation_center: float = 0.0  # in degrees
    azimuth_fov: float = 360.0  # in degrees, centred on +x

    def __post_init__(self):
        if self.channels < 1:
            raise ConfigError("Beam pattern needs at least one channel")
        if self.azimuth_step <= 0:
            raise ConfigError("Azimuth step must be positive")

    @classmethod
    def sparse(cls, **overrides):
        """32-beam situational sensor"""
        return replace(cls(32, 45.0, 0.2, elevation_center=0.0), **overrides)

    @classmethod
    def dense(cls, **overrides):
        """128-beam short-range precision sensor, 1024 columns over the full turn, looking down to nadir"""
        return replace(
            cls(128, 90.0, 360.0 / 1024, elevation_center=-45.0),
            **overrides,
        )


@dataclass
class ScanResult:
    cloud: object  # PointCloud in Body frame
    labels: object
    hole_centre: object  # ground-truth hole centre, Shadow frame
    sensor_origin: object = None
