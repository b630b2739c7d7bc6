from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from blasthole.utils.constants import (
    ALIGNMENT_FRACTION,
    GPS_JUMP_INTERVAL,
    GPS_SIGMA,
    HOLE_STEP_BUDGET,
    LOS_THRESHOLD,
    MAX_SPEED,
    MAX_YAW_RATE,
    ODOM_DRIFT_RATE,
    SEARCH_RADIUS,
    SERVO_DISTANCE,
    SIM_DT,
    SONDE_RADIUS,
    Phase,
)
from blasthole.utils.exceptions import ConfigError


@dataclass(frozen=True)
class NoiseModel:
    gps_sigma: float = GPS_SIGMA
    gps_interval: float = GPS_JUMP_INTERVAL
    odom_drift_rate: float = ODOM_DRIFT_RATE
    seed: int = 0

    def __post_init__(self):
        if self.gps_sigma < 0 or self.odom_drift_rate < 0:
            raise ConfigError("Noise magnitudes must be non-negative")
        if self.gps_interval <= 0:
            raise ConfigError("GPS jump interval must be positive")

    @classmethod
    def noiseless(cls, seed=0):
        return cls(gps_sigma=0.0, odom_drift_rate=0.0, seed=seed)


@dataclass(frozen=True)
class MissionConfig:
    search_radius: float = SEARCH_RADIUS
    servo_distance: float = SERVO_DISTANCE
    los_threshold: float = LOS_THRESHOLD  # in degrees
    max_speed: float = MAX_SPEED
    max_yaw_rate: float = MAX_YAW_RATE
    dt: float = SIM_DT
    sonde_radius: float = SONDE_RADIUS
    alignment_fraction: float = ALIGNMENT_FRACTION
    hole_step_budget: int = HOLE_STEP_BUDGET
    noise: NoiseModel = field(default_factory=NoiseModel)

    def alignment_tolerance(self, hole_radius):
        """Sonde-axis offset below which dipping is attempted"""
        return self.alignment_fraction * (hole_radius - self.sonde_radius)


@dataclass
class TargetLock:
    """Target position held separately per frame; the frames are never fused"""

    utm: np.ndarray
    odom: np.ndarray
    body: np.ndarray


@dataclass
class MissionState:
    phase: Phase = Phase.seek_gps
    hole_index: int = 0
    lock: Optional[TargetLock] = None
    hole_steps: int = 0
    lost_frames: int = 0
    dip_attempts: int = 0
    # Odom positions of holes already dipped, and of cones rejected for the current hole
    visited: Tuple[np.ndarray, ...] = ()
    rejected: Tuple[np.ndarray, ...] = ()


@dataclass
class HoleOutcome:
    index: int
    status: str  # "dipped" or "skipped"
    offset: float
    steps: int
    dip_attempts: int = 0


@dataclass
class MissionLog:
    timeline: List[dict] = field(default_factory=list)
    outcomes: List[HoleOutcome] = field(default_factory=list)
    commands: List[dict] = field(default_factory=list)
    time: float = 0.0

    @property
    def dipped(self):
        return sum(1 for outcome in self.outcomes if outcome.status == "dipped")


@dataclass(frozen=True)
class PlanHole:
    """One row of a mission plan: designated UTM position and column label"""

    x: float
    y: float
    column: int
    diameter: float = 0.27

    @property
    def position(self):
        return np.array([self.x, self.y])

    @property
    def radius(self):
        return self.diameter / 2.0


@dataclass(frozen=True)
class Sighting:
    """Perceived cone in the Body frame; `hole` is set once the hole itself is resolved"""

    body: np.ndarray
    hole: bool = False


@dataclass(frozen=True)
class VelocityCommand:
    """Body-frame velocity command"""

    vx: float = 0.0
    vy: float = 0.0
    yaw_rate: float = 0.0

    @classmethod
    def stop(cls):
        return cls()

    def as_dict(self):
        return {"vx": round(self.vx, 9), "vy": round(self.vy, 9), "yaw_rate": round(self.yaw_rate, 9)}
