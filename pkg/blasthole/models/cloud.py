from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from blasthole.utils.constants import (
    CORRIDOR_LENGTH,
    CORRIDOR_REAR,
    CORRIDOR_WIDTH,
    ROBOT_BODY_BOXES,
    Frame,
)
from blasthole.utils.exceptions import InvalidInputError


@dataclass
class PointCloud:
    """N x 3 points (meters) tagged with the frame they are expressed in"""

    points: np.ndarray
    frame: Frame
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.size == 0:
            points = points.reshape(0, 3)
        if points.ndim != 2 or points.shape[1] != 3:
            raise InvalidInputError(f"Point array must be N x 3, got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise InvalidInputError("Point cloud contains non-finite coordinates")
        self.points = points
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if len(self.labels) != len(points):
                raise InvalidInputError("Label count does not match point count")

    def __len__(self):
        return len(self.points)

    def select(self, mask):
        """Subset by boolean mask or index array, labels carried along"""
        labels = None if self.labels is None else self.labels[mask]
        return PointCloud(self.points[mask], self.frame, labels)

    @classmethod
    def empty(cls, frame):
        return cls(np.zeros((0, 3)), frame)

    @classmethod
    def concatenate(cls, clouds, frame):
        clouds = [cloud for cloud in clouds if len(cloud)]
        if not clouds:
            return cls.empty(frame)
        points = np.vstack([cloud.points for cloud in clouds])
        labels = None
        if all(cloud.labels is not None for cloud in clouds):
            labels = np.concatenate([cloud.labels for cloud in clouds])
        return cls(points, frame, labels)


@dataclass(frozen=True)
class BoxFilter:
    """Axis-aligned box in Body frame; points inside are robot body returns"""

    low: Tuple[float, float, float]
    high: Tuple[float, float, float]

    def contains(self, points):
        low = np.asarray(self.low)
        high = np.asarray(self.high)
        return np.all((points >= low) & (points <= high), axis=1)


def default_boxes():
    return tuple(BoxFilter(tuple(low), tuple(high)) for low, high in ROBOT_BODY_BOXES)


@dataclass(frozen=True)
class CorridorSpec:
    """Forward corridor x in [-rear, length], |y| <= width / 2, plus body boxes"""

    length: float = CORRIDOR_LENGTH
    width: float = CORRIDOR_WIDTH
    rear: float = CORRIDOR_REAR
    boxes: Tuple[BoxFilter, ...] = field(default_factory=default_boxes)


@dataclass
class ConeDetection:
    """Extracted drill-waste cone"""

    centroid: np.ndarray
    height: float
    points: PointCloud
    hull_xy: np.ndarray

    @property
    def distance(self):
        """Horizontal distance from the frame origin (the robot) to the cone centre"""
        return float(np.hypot(self.centroid[0], self.centroid[1]))
