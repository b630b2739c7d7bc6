from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from blasthole.utils.constants import Frame


def as_vec3(value):
    vector = np.asarray(value, dtype=float).reshape(3)
    return vector


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation mapping points from `source` to `target` frame"""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    source: Optional[Frame] = None
    target: Optional[Frame] = None

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "translation", as_vec3(self.translation))

    @classmethod
    def identity(cls, source=None, target=None):
        return cls(np.eye(3), np.zeros(3), source, target)

    def apply(self, points):
        """Apply to an (N, 3) array or a single 3-vector"""
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def inverse(self):
        rotation_t = self.rotation.T
        return RigidTransform(
            rotation_t, -rotation_t @ self.translation, self.target, self.source
        )

    def __matmul__(self, other):
        """self ∘ other: apply `other` first"""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
            other.source,
            self.target,
        )

    def __repr__(self):
        return f"<RigidTransform {self.source} -> {self.target} t={self.translation}>"


@dataclass(frozen=True)
class RobotPose:
    """Planar robot pose on the bench plus IMU tilt; angles in radians"""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0

    @property
    def position(self):
        return np.array([self.x, self.y, 0.0])

    @property
    def heading(self):
        return np.array([np.cos(self.yaw), np.sin(self.yaw)])
