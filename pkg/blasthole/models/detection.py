from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from blasthole.models.cloud import ConeDetection
from blasthole.utils.constants import (
    FRST_ALPHA,
    FRST_NOISE_FLOOR,
    FRST_PEAK_THRESHOLD,
    FRST_RADIUS_STEPS,
    FRST_RADIUS_SWEEP,
    FRST_ROI_MARGIN,
    FRST_SIGMA_FACTOR,
    NMS_ALPHA_1,
    NMS_ALPHA_2,
    NMS_BINS,
    NMS_BLACK_FRACTION_MIN,
    NMS_CENTRALITY_THRESHOLD,
    NMS_CIRCULARITY_THRESHOLD,
    NMS_FRST_THRESHOLD,
    NMS_SIGMA,
    RANSAC_CONFIDENCE,
    RANSAC_INLIER_TOL,
    RANSAC_MAX_RETRIES,
    RANSAC_MIN_INLIERS,
    RANSAC_SEED_SIZE,
    Gate,
    Lidar,
    Stage,
)
from blasthole.utils.exceptions import ConfigError, InvalidInputError


@dataclass(frozen=True)
class FrstConfig:
    radii: Tuple[float, ...] = ()
    alpha: float = FRST_ALPHA
    sigma_factor: float = FRST_SIGMA_FACTOR
    peak_threshold: float = FRST_PEAK_THRESHOLD
    roi_radius_margin: float = FRST_ROI_MARGIN
    noise_floor: float = FRST_NOISE_FLOOR
    radius_sweep: float = FRST_RADIUS_SWEEP
    radius_steps: int = FRST_RADIUS_STEPS

    def __post_init__(self):
        if self.alpha < 1.0:
            raise ConfigError(f"FRST radial strictness must be >= 1, got {self.alpha}")
        if any(radius <= 0 for radius in self.radii):
            raise ConfigError("FRST radii must be positive")
        if list(self.radii) != sorted(self.radii):
            raise ConfigError("FRST radii must be sorted ascending")

    def gaussian_sigma(self, radius):
        return self.sigma_factor * radius


@dataclass
class FrstMaps:
    radii: Tuple[float, ...]
    orientation: List[np.ndarray]
    magnitude: List[np.ndarray]
    symmetry: np.ndarray


@dataclass
class RegionOfInterest:
    centre_hint: Tuple[float, float]
    pixels: np.ndarray  # (N, 2) of (u, v)
    feature_count: int
    source_radius: float

    def __post_init__(self):
        if len(self.pixels) == 0:
            raise InvalidInputError("Region of interest has no pixels")
        if self.feature_count < 1:
            raise InvalidInputError("Region of interest needs at least one feature vote")


@dataclass(frozen=True)
class Circle:
    a: float
    b: float
    r: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and np.isfinite(self.r)):
            raise InvalidInputError("Circle parameters must be finite")
        if self.r <= 0:
            raise InvalidInputError(f"Circle radius must be positive, got {self.r}")

    @property
    def centre(self):
        return np.array([self.a, self.b])

    def residuals(self, points):
        """Absolute distance of each point to the circle"""
        points = np.asarray(points, dtype=float)
        return np.abs(np.hypot(points[:, 0] - self.a, points[:, 1] - self.b) - self.r)

    def mask(self, shape):
        """Boolean [v, u] raster of the pixels inside the circle"""
        rows, cols = np.indices(shape)
        return (cols - self.a) ** 2 + (rows - self.b) ** 2 <= self.r**2

    def as_dict(self):
        return {"a": self.a, "b": self.b, "r": self.r}


@dataclass(frozen=True)
class RansacConfig:
    max_retries: int = RANSAC_MAX_RETRIES
    seed_size: int = RANSAC_SEED_SIZE
    inlier_tol: float = RANSAC_INLIER_TOL
    min_inliers: int = RANSAC_MIN_INLIERS
    rng_seed: int = 0
    confidence: float = RANSAC_CONFIDENCE

    def __post_init__(self):
        if self.seed_size < 3:
            raise ConfigError("RANSAC seed size must be at least 3")
        if self.inlier_tol <= 0:
            raise ConfigError("RANSAC inlier tolerance must be positive")


@dataclass(frozen=True)
class NmsConfig:
    radius_range: Tuple[float, float] = (1.0, 1000.0)
    circularity_threshold: float = NMS_CIRCULARITY_THRESHOLD
    black_fraction_min: float = NMS_BLACK_FRACTION_MIN
    centrality_threshold: float = NMS_CENTRALITY_THRESHOLD
    frst_threshold: float = NMS_FRST_THRESHOLD
    alpha_1: float = NMS_ALPHA_1
    alpha_2: float = NMS_ALPHA_2
    bins: int = NMS_BINS
    sigma: float = NMS_SIGMA

    def __post_init__(self):
        low, high = self.radius_range
        if not 0 < low < high:
            raise ConfigError(f"Radius range must satisfy 0 < min < max, got {self.radius_range}")
        for name in (
            "circularity_threshold",
            "black_fraction_min",
            "centrality_threshold",
            "frst_threshold",
        ):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.bins < 4:
            raise ConfigError("Circularity needs at least 4 bins")

    @property
    def max_confidence(self):
        return self.alpha_1 + self.alpha_2 + 1.0


@dataclass
class Candidate:
    circle: Circle
    roi: RegionOfInterest
    inliers: np.ndarray
    score_frst: float = 0.0
    score_reg: float = 0.0
    score_circle: float = 0.0
    score_conf: float = 0.0
    centre_offset: float = 0.0  # px from the image centre
    rejected_by: Optional[Gate] = None

    def as_dict(self):
        return {
            "circle": self.circle.as_dict(),
            "feature_count": int(self.roi.feature_count),
            "inliers": int(len(self.inliers)),
            "score_frst": float(self.score_frst),
            "score_reg": float(self.score_reg),
            "score_circle": float(self.score_circle),
            "score_conf": float(self.score_conf),
            "centre_offset": float(self.centre_offset),
            "rejected_by": self.rejected_by.value if self.rejected_by else None,
        }


@dataclass
class HoleDetection:
    centre_3d: np.ndarray  # Shadow frame, in meters
    radius: float  # in meters
    confidence: float
    stage: Stage
    pixel_centre: Optional[Tuple[float, float]] = None
    pixel_radius: Optional[float] = None
    candidates: List[Candidate] = field(default_factory=list)
    debug: Dict[str, object] = field(default_factory=dict)


@dataclass
class TrackState:
    target_distance: float = np.inf
    cone: Optional[ConeDetection] = None
    last_detection: Optional[HoleDetection] = None
    active_lidar: Lidar = Lidar.sparse
    lost_frames: int = 0
    lost: bool = False
    coarse_centre: Optional[np.ndarray] = None
    frame_index: int = 0
