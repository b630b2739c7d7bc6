from dataclasses import replace

import numpy as np

from blasthole.models.detection import TrackState
from blasthole.models.geometry import RobotPose
from blasthole.models.mission import (
    HoleOutcome,
    MissionConfig,
    MissionLog,
    MissionState,
    PlanHole,
    Sighting,
    TargetLock,
    VelocityCommand,
)
from blasthole.models.scene import BeamPattern, SceneSpec
from blasthole.services import pipeline, scene
from blasthole.services.geometry import yaw_rotation
from blasthole.utils.constants import (
    HOLE_DIAMETER_MAX,
    HOLE_DIAMETER_MIN,
    MAX_DIP_ATTEMPTS,
    TRACK_LOST_FRAMES,
    VISITED_GATE,
    Lidar,
    Phase,
)
from blasthole.utils.exceptions import ConfigError, InvalidInputError, MissionError
from blasthole.utils.logger import logger

SERVO_GAIN = 1.0  # in 1/s
TRACK_GATE = 1.0  # in meters
CONE_RANGE = 6.0  # in meters
HOLE_RANGE = 3.0  # in meters
CONE_NOISE = 0.05  # in meters
HOLE_NOISE = 0.005  # in meters
START_STANDOFF = 5.0  # in meters

# phase changes a handler may make; a hole skipped on budget restarts at SeekGps from any phase
TRANSITIONS = {
    (Phase.seek_gps, Phase.fine_planning),
    (Phase.fine_planning, Phase.visual_servo),
    (Phase.fine_planning, Phase.seek_gps),
    (Phase.visual_servo, Phase.dipping),
    (Phase.visual_servo, Phase.fine_planning),
    (Phase.dipping, Phase.seek_gps),
    (Phase.dipping, Phase.visual_servo),
    (Phase.dipping, Phase.done),
}


def wrap_angle(angle):
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


def planar(pose):
    return np.array([pose.x, pose.y])


def body_to_world(pose, body):
    return planar(pose) + yaw_rotation(pose.yaw)[:2, :2] @ np.asarray(body, dtype=float)[:2]


def world_to_body(pose, point):
    return yaw_rotation(pose.yaw)[:2, :2].T @ (np.asarray(point, dtype=float)[:2] - planar(pose))


def los_angle(pose, target):
    """Absolute angle between the robot heading and the line of sight to target"""
    offset = np.asarray(target, dtype=float)[:2] - planar(pose)
    return abs(wrap_angle(np.arctan2(offset[1], offset[0]) - pose.yaw))


def match_target(detections, designated_utm, robot_pose, search_radius=4.0):
    """
    Pick the detected cone that belongs to the designated hole.

    Args:
        detections: UTM positions of detected cones
        designated_utm: Designated hole position
        robot_pose: Robot pose in UTM
        search_radius: Detections farther than this from the designated point are ignored

    Returns:
        Index of the chosen detection (smallest line-of-sight angle), or None
    """
    designated = np.asarray(designated_utm, dtype=float)[:2]
    chosen, chosen_los = None, np.inf
    for index, detection in enumerate(detections):
        if np.hypot(*(np.asarray(detection, dtype=float)[:2] - designated)) > search_radius:
            continue
        los = los_angle(robot_pose, detection)
        if los < chosen_los:
            chosen, chosen_los = index, los
    return chosen


def boustrophedon_order(holes):
    """
    Serpentine visit order: columns in label order, top to bottom in the
    first column, bottom to top in the next, and so on.

    Args:
        holes: Sequence of PlanHole

    Returns:
        List of indices into holes
    """
    order = []
    for rank, column in enumerate(sorted({hole.column for hole in holes})):
        members = sorted(
            (index for index, hole in enumerate(holes) if hole.column == column),
            key=lambda index: (-holes[index].y, holes[index].x, index),
        )
        if rank % 2:
            members.reverse()
        order.extend(members)
    return order


def grid_plan(columns, rows, spacing, count=None, diameter=0.27):
    """Regular hole layout: column c at x = c * spacing, row r at y = r * spacing"""
    if columns < 1 or rows < 1 or spacing <= 0:
        raise InvalidInputError("Grid plan needs positive columns, rows and spacing")
    holes = [
        PlanHole(float(column * spacing), float(row * spacing), column, diameter)
        for column in range(columns)
        for row in range(rows)
    ]
    return holes[:count] if count is not None else holes


class MissionWorld:
    """
    Ground truth and sensors of a simulated mission.

    The robot is an omnidirectional point with saturated velocity. GPS is the
    true position plus a piecewise-constant Rayleigh offset resampled every
    noise.gps_interval seconds; odometry integrates true motion plus a drift
    proportional to the distance traveled.
    """

    def __init__(self, plan, holes, start, config, perception, track_lost_frames=TRACK_LOST_FRAMES):
        if not plan:
            raise InvalidInputError("Mission plan is empty")
        self.plan = list(plan)
        self.holes = np.asarray(holes, dtype=float).reshape(-1, 2)
        self.order = boustrophedon_order(self.plan)
        self.pose = start
        self.config = config
        self.perception = perception
        self.track_lost_frames = track_lost_frames
        self.log = MissionLog()
        self.steps = 0

        noise = config.noise
        self.rng = np.random.default_rng(noise.seed)
        angle = self.rng.uniform(0.0, 2.0 * np.pi)
        self.drift_direction = np.array([np.cos(angle), np.sin(angle)])
        self.odom_position = planar(start)
        self.gps_offset = np.zeros(2)
        self.next_gps_jump = 0.0
        self.update_gps()

    @classmethod
    def from_plan(cls, plan, config=None, perception=None, gps_offset=1.0, seed=0, **kwargs):
        """True holes sit gps_offset meters from their designated points, in seeded directions"""
        config = config or MissionConfig()
        rng = np.random.default_rng(seed)
        angles = rng.uniform(0.0, 2.0 * np.pi, len(plan))
        designated = np.array([[hole.x, hole.y] for hole in plan]).reshape(-1, 2)
        holes = designated + gps_offset * np.column_stack([np.cos(angles), np.sin(angles)])

        first = designated[boustrophedon_order(plan)[0]] if len(plan) else np.zeros(2)
        start = RobotPose(float(first[0] - START_STANDOFF), float(first[1]), 0.0)
        perception = perception or GeometricPerception(seed=seed)
        return cls(plan, holes, start, config, perception, **kwargs)

    @property
    def time(self):
        return self.steps * self.config.dt

    def target_index(self, hole_index):
        return self.order[hole_index]

    def designated(self, hole_index):
        return self.plan[self.target_index(hole_index)].position

    def gps_pose(self):
        x, y = planar(self.pose) + self.gps_offset
        return RobotPose(float(x), float(y), self.pose.yaw)

    def odom_pose(self):
        return RobotPose(float(self.odom_position[0]), float(self.odom_position[1]), self.pose.yaw)

    def true_offset(self, hole_index):
        """Horizontal distance between the sonde axis and the true hole centre"""
        return float(np.hypot(*(planar(self.pose) - self.holes[self.target_index(hole_index)])))

    def update_gps(self):
        noise = self.config.noise
        while self.time >= self.next_gps_jump - 1e-9:
            magnitude = self.rng.rayleigh(noise.gps_sigma) if noise.gps_sigma > 0 else 0.0
            angle = self.rng.uniform(0.0, 2.0 * np.pi)
            self.gps_offset = magnitude * np.array([np.cos(angle), np.sin(angle)])
            self.next_gps_jump += noise.gps_interval

    def advance(self, command, dt):
        """Integrate a Body-frame velocity command for dt seconds"""
        velocity = np.array([command.vx, command.vy])
        speed = float(np.hypot(*velocity))
        if speed > self.config.max_speed:
            velocity *= self.config.max_speed / speed
        yaw_rate = float(np.clip(command.yaw_rate, -self.config.max_yaw_rate, self.config.max_yaw_rate))

        displacement = yaw_rotation(self.pose.yaw)[:2, :2] @ velocity * dt
        x, y = planar(self.pose) + displacement
        self.pose = RobotPose(float(x), float(y), float(wrap_angle(self.pose.yaw + yaw_rate * dt)))
        drift = self.config.noise.odom_drift_rate * float(np.hypot(*displacement))
        self.odom_position = self.odom_position + displacement + drift * self.drift_direction
        self.steps += 1
        self.update_gps()


class GeometricPerception:
    """
    Fast stand-in for the detection pipeline.

    Every cone within cone_range is reported with cone_noise; within
    hole_range the hole itself is resolved and reported with hole_noise.
    """

    def __init__(
        self,
        cone_range=CONE_RANGE,
        hole_range=HOLE_RANGE,
        cone_noise=CONE_NOISE,
        hole_noise=HOLE_NOISE,
        seed=0,
    ):
        self.cone_range = cone_range
        self.hole_range = hole_range
        self.cone_noise = cone_noise
        self.hole_noise = hole_noise
        self.rng = np.random.default_rng(seed)

    def observe(self, world):
        sightings = []
        for centre in world.holes:
            body = world_to_body(world.pose, centre)
            distance = float(np.hypot(*body))
            if distance > self.cone_range:
                continue
            hole = distance <= self.hole_range
            sigma = self.hole_noise if hole else self.cone_noise
            sightings.append(Sighting(body + self.rng.normal(0.0, sigma, 2), hole))
        return sightings


class PipelinePerception:
    """
    Perception through the full detection pipeline.

    The scene around the nearest true hole is ray-cast from the robot pose
    every `refresh` seconds and run through the tracker; between captures the
    last sightings are carried along in world coordinates.
    """

    def __init__(self, cfg, cone_range=CONE_RANGE, refresh=0.5, seed=0):
        self.cfg = cfg
        self.cone_range = cone_range
        self.refresh = refresh
        self.seed = seed
        self.state = TrackState()
        self.target = None
        self.cache = []
        self.last_capture = -np.inf
        self.frames = 0

    def pattern(self):
        return BeamPattern.dense() if self.state.active_lidar is Lidar.dense else BeamPattern.sparse()

    def capture(self, world, index):
        hole = world.plan[index]
        spec = SceneSpec(
            hole_diameter=float(np.clip(hole.diameter, HOLE_DIAMETER_MIN, HOLE_DIAMETER_MAX)),
            centre=tuple(float(c) for c in world.holes[index]),
            seed=self.seed + index,
        )
        result = scene.scan(scene.generate(spec), world.pose, self.pattern(), seed=self.seed + self.frames)
        self.frames += 1
        self.state, detection, record = pipeline.process_frame(result.cloud, world.pose, self.state, self.cfg)
        if detection is not None:
            return [(body_to_world(world.pose, detection.centre_3d), True)]
        if record.cone is not None:
            return [(body_to_world(world.pose, record.cone["centroid"]), False)]
        return []

    def observe(self, world):
        distances = np.hypot(*(world.holes - planar(world.pose)).T)
        index = int(np.argmin(distances))
        if distances[index] > self.cone_range:
            return []
        if index != self.target:
            self.state, self.target, self.last_capture = TrackState(), index, -np.inf
        if world.time - self.last_capture >= self.refresh - 1e-9:
            self.cache = self.capture(world, index)
            self.last_capture = world.time
        return [Sighting(world_to_body(world.pose, position), hole) for position, hole in self.cache]


def associate(sightings, expected, gate=TRACK_GATE):
    """Sighting nearest to the expected Body-frame position, within the gate"""
    best, best_distance = None, gate
    for sighting in sightings:
        distance = float(np.hypot(*(sighting.body - expected)))
        if distance <= best_distance:
            best, best_distance = sighting, distance
    return best


def pursue(pose, target, cfg, dt):
    """Straight-line pursuit of a target, turning the heading onto the line of sight"""
    body = world_to_body(pose, target)
    distance = float(np.hypot(*body))
    if distance < 1e-9:
        return VelocityCommand.stop()
    speed = min(cfg.max_speed, distance / dt)
    bearing = np.arctan2(body[1], body[0])
    yaw_rate = float(np.clip(bearing / dt, -cfg.max_yaw_rate, cfg.max_yaw_rate))
    return VelocityCommand(float(body[0] / distance * speed), float(body[1] / distance * speed), yaw_rate)


def realign(pose, target, cfg, dt):
    """Turn in place towards the target"""
    body = world_to_body(pose, target)
    bearing = np.arctan2(body[1], body[0])
    return VelocityCommand(0.0, 0.0, float(np.clip(bearing / dt, -cfg.max_yaw_rate, cfg.max_yaw_rate)))


def next_hole(state, world, status, offset):
    outcome = HoleOutcome(world.target_index(state.hole_index), status, offset, state.hole_steps, state.dip_attempts)
    world.log.outcomes.append(outcome)
    logger.info(f"Hole {outcome.index} {status} after {outcome.steps} steps, offset {offset:.3f} m")
    visited = state.visited
    if status == "dipped":
        visited = visited + (planar(world.odom_pose()),)
    index = state.hole_index + 1
    phase = Phase.done if index >= len(world.order) else Phase.seek_gps
    return MissionState(phase=phase, hole_index=index, visited=visited)


def near_any(position, positions, gate=VISITED_GATE):
    return any(np.hypot(*(position - other)) <= gate for other in positions)


def seek_gps(state, world, dt):
    gps, odom = world.gps_pose(), world.odom_pose()
    target = world.designated(state.hole_index)
    excluded = state.visited + state.rejected
    sightings = [
        sighting
        for sighting in world.perception.observe(world)
        if not near_any(body_to_world(odom, sighting.body), excluded)
    ]
    detections = [body_to_world(gps, sighting.body) for sighting in sightings]
    chosen = match_target(detections, target, gps, world.config.search_radius)
    if chosen is None:
        return state, pursue(gps, target, world.config, dt)

    body = sightings[chosen].body
    lock = TargetLock(utm=detections[chosen], odom=body_to_world(odom, body), body=body)
    logger.debug(f"Cone locked for hole {world.target_index(state.hole_index)} at {np.round(lock.utm, 3)}")
    return replace(state, phase=Phase.fine_planning, lock=lock, lost_frames=0), VelocityCommand.stop()


def fine_planning(state, world, dt):
    cfg = world.config
    odom = world.odom_pose()
    lock = state.lock
    sighting = associate(world.perception.observe(world), world_to_body(odom, lock.odom))
    if sighting is None:
        lost_frames = state.lost_frames + 1
        if lost_frames > world.track_lost_frames:
            logger.warning("Target lost during fine planning, back to GPS seeking")
            return replace(state, phase=Phase.seek_gps, lock=None, lost_frames=0), VelocityCommand.stop()
        state = replace(state, lost_frames=lost_frames)
    else:
        # UTM lock stays frozen; odometry and Body positions follow the detections
        lock = TargetLock(utm=lock.utm, odom=body_to_world(odom, sighting.body), body=sighting.body)
        state = replace(state, lock=lock, lost_frames=0)
        if sighting.hole and np.hypot(*sighting.body) <= cfg.servo_distance:
            return replace(state, phase=Phase.visual_servo), VelocityCommand.stop()

    if np.degrees(los_angle(odom, lock.odom)) > cfg.los_threshold:
        return state, realign(odom, lock.odom, cfg, dt)
    return state, pursue(odom, lock.odom, cfg, dt)


def visual_servo(state, world, dt):
    cfg = world.config
    sighting = associate(world.perception.observe(world), state.lock.body)
    if sighting is None or not sighting.hole:
        lost_frames = state.lost_frames + 1
        if lost_frames > world.track_lost_frames:
            return replace(state, phase=Phase.fine_planning, lost_frames=0), VelocityCommand.stop()
        return replace(state, lost_frames=lost_frames), VelocityCommand.stop()

    body = sighting.body
    state = replace(state, lock=replace(state.lock, body=body), lost_frames=0)
    radius = world.plan[world.target_index(state.hole_index)].radius
    if np.hypot(*body) < cfg.alignment_tolerance(radius):
        return replace(state, phase=Phase.dipping), VelocityCommand.stop()

    velocity = SERVO_GAIN * body
    speed = float(np.hypot(*velocity))
    if speed > cfg.max_speed:
        velocity *= cfg.max_speed / speed
    return state, VelocityCommand(float(velocity[0]), float(velocity[1]), 0.0)


def dipping(state, world, dt):
    """
    Lower the sonde.

    It goes in when the sonde axis is within the hole-sonde clearance. A sonde
    that lands outside the hole altogether means the servo tracked the wrong
    cone: that cone is rejected for this hole and the search restarts. After
    MAX_DIP_ATTEMPTS failures the hole is skipped.
    """
    radius = world.plan[world.target_index(state.hole_index)].radius
    offset = world.true_offset(state.hole_index)
    state = replace(state, dip_attempts=state.dip_attempts + 1)
    if offset < radius - world.config.sonde_radius:
        return next_hole(state, world, "dipped", offset), VelocityCommand.stop()
    if state.dip_attempts >= MAX_DIP_ATTEMPTS:
        logger.warning(f"Giving up after {state.dip_attempts} rejected dips")
        return next_hole(state, world, "skipped", offset), VelocityCommand.stop()

    logger.warning(f"Dip rejected: offset {offset:.3f} m exceeds clearance")
    if offset >= radius:
        rejected = state.rejected + (planar(world.odom_pose()),)
        return replace(state, phase=Phase.seek_gps, lock=None, lost_frames=0, rejected=rejected), VelocityCommand.stop()
    return replace(state, phase=Phase.visual_servo), VelocityCommand.stop()


PHASE_HANDLERS = {
    Phase.seek_gps: seek_gps,
    Phase.fine_planning: fine_planning,
    Phase.visual_servo: visual_servo,
    Phase.dipping: dipping,
}


def step(state, world, dt):
    """
    Advance the mission state machine by one tick.

    SeekGps navigates on the noisy UTM estimate, FinePlanning on odometry,
    VisualServo on Body-frame detections alone; the frames are never fused.
    A hole that exhausts its step budget is skipped.

    Returns:
        (MissionState, VelocityCommand)
    """
    if state.phase is Phase.done:
        return state, VelocityCommand.stop()
    state = replace(state, hole_steps=state.hole_steps + 1)
    if state.hole_steps > world.config.hole_step_budget:
        logger.warning(f"Step budget exhausted on hole {world.target_index(state.hole_index)}")
        return next_hole(state, world, "skipped", world.true_offset(state.hole_index)), VelocityCommand.stop()

    new_state, command = PHASE_HANDLERS[state.phase](state, world, dt)
    change = (state.phase, new_state.phase)
    if new_state.phase is not state.phase and change not in TRANSITIONS:
        raise MissionError(f"Transition {change[0].value} -> {change[1].value} is outside the mission cycle")
    return new_state, command


def lock_distances(state, world):
    if state.lock is None:
        return None, None
    odom = float(np.hypot(*(state.lock.odom - planar(world.odom_pose()))))
    utm = float(np.hypot(*(state.lock.utm - planar(world.gps_pose()))))
    return odom, utm


def run_mission(plan, config=None, perception=None, gps_offset=1.0, seed=0, track_lost_frames=TRACK_LOST_FRAMES):
    """
    Run the state machine over a plan until every hole is dipped or skipped.

    Args:
        plan: Sequence of PlanHole (designated positions)
        config: MissionConfig
        perception: Object with observe(world) -> [Sighting]; geometric by default
        gps_offset: Distance between each designated point and its true hole
        seed: Seed for hole placement and default perception noise

    Returns:
        MissionLog
    """
    config = config or MissionConfig()
    if config.dt <= 0:
        raise ConfigError("Simulation step must be positive")
    world = MissionWorld.from_plan(plan, config, perception, gps_offset, seed, track_lost_frames=track_lost_frames)
    state = MissionState()
    log = world.log
    log.timeline.append({"time": 0.0, "phase": state.phase.value, "hole": world.target_index(0)})

    max_steps = config.hole_step_budget * (len(plan) + 1)
    for _ in range(max_steps):
        if state.phase is Phase.done:
            break
        issued_by, hole_index = state.phase, state.hole_index
        state, command = step(state, world, config.dt)
        world.advance(command, config.dt)

        odom_distance, utm_distance = lock_distances(state, world)
        log.commands.append(
            {
                "time": round(world.time, 6),
                "phase": issued_by.value,
                "hole": world.target_index(hole_index),
                "odom_distance": odom_distance,
                "utm_distance": utm_distance,
                **command.as_dict(),
            }
        )
        if state.phase is not issued_by or state.hole_index != hole_index:
            hole = world.target_index(state.hole_index) if state.hole_index < len(world.order) else None
            log.timeline.append({"time": round(world.time, 6), "phase": state.phase.value, "hole": hole})

    log.time = world.time
    logger.info(f"Mission finished: {log.dipped}/{len(plan)} holes dipped in {log.time:.1f} s simulated")
    return log
