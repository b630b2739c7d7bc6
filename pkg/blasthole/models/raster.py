from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from blasthole.models.camera import CameraSettings
from blasthole.models.geometry import RigidTransform


@dataclass
class GrayImage:
    """Float raster [v, u] with its validity mask and, when it came from a projection, the camera"""

    values: np.ndarray
    valid: np.ndarray
    settings: Optional[CameraSettings] = None
    camera_pose: Optional[RigidTransform] = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def ground_depth(self):
        if self.camera_pose is None:
            return np.inf
        return float(self.camera_pose.translation[2])


@dataclass
class BinaryImage:
    """White (True) = material, black (False) = void"""

    mask: np.ndarray

    @property
    def shape(self):
        return self.mask.shape

    def to_gray(self, sigma=1.0):
        intensity = self.mask.astype(float)
        if sigma > 0:
            intensity = ndimage.gaussian_filter(intensity, sigma, mode="nearest")
        return GrayImage(intensity, np.ones(self.mask.shape, dtype=bool))

    def black_fraction(self, region):
        """Fraction of black pixels inside a boolean region mask"""
        count = np.count_nonzero(region)
        if count == 0:
            return 0.0
        return float(np.count_nonzero(region & ~self.mask)) / count


@dataclass
class GradientImage:
    """Per-pixel Sobel magnitude and unit direction; direction is (0, 0) where magnitude is 0"""

    magnitude: np.ndarray
    gx: np.ndarray
    gy: np.ndarray

    @property
    def shape(self):
        return self.magnitude.shape

    def edge_pixels(self, noise_floor=0.0):
        """(u, v) coordinates of pixels whose magnitude exceeds noise_floor * max"""
        peak = float(self.magnitude.max()) if self.magnitude.size else 0.0
        if peak <= 0.0:
            return np.zeros((0, 2), dtype=int)
        rows, cols = np.nonzero(self.magnitude > noise_floor * peak)
        return np.column_stack([cols, rows])

    def ridge_pixels(self, noise_floor=0.0):
        """Edge pixels whose magnitude is not exceeded by either neighbour along their own gradient"""
        pixels = self.edge_pixels(noise_floor)
        if len(pixels) == 0:
            return pixels
        u, v = pixels[:, 0], pixels[:, 1]
        du = np.rint(self.gx[v, u]).astype(int)
        dv = np.rint(self.gy[v, u]).astype(int)
        padded = np.pad(self.magnitude, 1)
        here = self.magnitude[v, u]
        ahead = padded[v + dv + 1, u + du + 1]
        behind = padded[v - dv + 1, u - du + 1]
        return pixels[(here >= ahead) & (here >= behind)]


@dataclass
class Blob:
    """8-connected component; pixels are (u, v) pairs"""

    pixels: np.ndarray
    area: int
    centroid: Tuple[float, float]
    bbox: Tuple[int, int, int, int]  # u_min, v_min, u_max, v_max

    @classmethod
    def from_pixels(cls, pixels):
        pixels = np.asarray(pixels, dtype=int)
        u_min, v_min = pixels.min(axis=0)
        u_max, v_max = pixels.max(axis=0)
        centroid = tuple(float(c) for c in pixels.mean(axis=0))
        return cls(pixels, len(pixels), centroid, (int(u_min), int(v_min), int(u_max), int(v_max)))

    def encloses(self, other):
        """True when the other blob's bounding box lies inside this blob's"""
        u_min, v_min, u_max, v_max = self.bbox
        o_u_min, o_v_min, o_u_max, o_v_max = other.bbox
        return u_min <= o_u_min and v_min <= o_v_min and o_u_max <= u_max and o_v_max <= v_max
