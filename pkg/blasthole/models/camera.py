from dataclasses import dataclass
from typing import Tuple

import numpy as np

from blasthole.models.geometry import RigidTransform
from blasthole.utils.constants import IMAGE_HEIGHT, IMAGE_WIDTH
from blasthole.utils.exceptions import ConfigError, InvalidInputError


@dataclass(frozen=True)
class CameraSettings:
    """Downward-looking virtual pinhole camera"""

    z_cam: float
    fov: float  # horizontal, in degrees
    width: int = IMAGE_WIDTH
    height: int = IMAGE_HEIGHT

    def __post_init__(self):
        if not 0.0 < self.fov < 180.0:
            raise ConfigError(f"Field of view must be in (0, 180) degrees, got {self.fov}")
        if self.z_cam <= 0.0:
            raise ConfigError(f"Camera height must be positive, got {self.z_cam}")
        if self.width < 1 or self.height < 1:
            raise ConfigError("Image size must be at least 1 x 1")

    @property
    def focal(self):
        return (self.width / 2.0) / np.tan(np.radians(self.fov) / 2.0)

    @property
    def cx(self):
        return self.width / 2.0

    @property
    def cy(self):
        return self.height / 2.0

    @property
    def shape(self):
        return (self.height, self.width)

    def footprint(self, depth):
        """Metres covered by one pixel at the given camera depth"""
        return depth / self.focal


@dataclass(frozen=True)
class FilterConfig:
    morph_kernel: int
    blur_kernel: int
    blur_sigma: float
    binary_threshold: float

    def __post_init__(self):
        for name in ("morph_kernel", "blur_kernel"):
            value = getattr(self, name)
            if value < 1 or value % 2 == 0:
                raise ConfigError(f"{name} must be an odd integer >= 1, got {value}")


@dataclass(frozen=True)
class LutRow:
    distance: float
    z_cam: float
    fov: float
    filter: FilterConfig


@dataclass(frozen=True)
class ProjectionLUT:
    """Distance-indexed camera and filter settings, sorted by distance"""

    rows: Tuple[LutRow, ...]

    def __len__(self):
        return len(self.rows)

    def column(self, getter):
        return np.array([getter(row) for row in self.rows], dtype=float)


@dataclass
class DepthImage:
    """
    Camera-frame depth raster, stored [v, u] (rows, columns).

    Invalid pixels carry `np.inf` so a minimum z-buffer treats them as empty.
    `camera_pose` maps Camera-frame points into the Shadow frame.
    """

    depth: np.ndarray
    valid: np.ndarray
    settings: CameraSettings
    camera_pose: RigidTransform

    def __post_init__(self):
        if self.depth.shape != self.settings.shape or self.valid.shape != self.settings.shape:
            raise InvalidInputError(
                f"Raster shape {self.depth.shape} does not match camera {self.settings.shape}"
            )

    @property
    def ground_depth(self):
        """Camera depth of the bench plane (Shadow z = 0)"""
        return float(self.camera_pose.translation[2])

    @property
    def valid_count(self):
        return int(np.count_nonzero(self.valid))
