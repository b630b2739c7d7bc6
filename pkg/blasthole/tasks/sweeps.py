import numpy as np

from blasthole.celery_app import celery
from blasthole.config import load_pipeline_config
from blasthole.models.detection import TrackState
from blasthole.models.geometry import RobotPose
from blasthole.models.scene import BeamPattern, Pit, SceneSpec
from blasthole.services import pipeline, scene
from blasthole.utils.constants import HOLE_DIAMETER_MAX, HOLE_DIAMETER_MIN, Stage
from blasthole.utils.logger import logger

SWEEP_DISTANCES = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0)
APPROACH_DISTANCES = (3.51, 3.09, 2.51, 0.87, 0.50, 0.01)
LATERAL_JITTER = 0.1  # in meters
YAW_JITTER = 5.0  # in degrees
PHANTOM_DEPTH = 0.08  # in meters
PHANTOM_RADIUS = 0.12  # in meters
CONE_CENTROID_TOLERANCE = 0.15  # in meters


def bench_scene(seed, distance, diameter=None, pits=()):
    """
    Seeded bench scene with the cone `distance` meters ahead of the robot.

    Returns:
        (Scene, RobotPose)
    """
    rng = np.random.default_rng(seed)
    if diameter is None:
        diameter = float(rng.uniform(HOLE_DIAMETER_MIN, HOLE_DIAMETER_MAX))
    lateral = float(rng.uniform(-LATERAL_JITTER, LATERAL_JITTER))
    yaw = float(np.radians(rng.uniform(-YAW_JITTER, YAW_JITTER)))
    spec = SceneSpec(hole_diameter=diameter, centre=(distance, lateral), pits=tuple(pits), seed=seed)
    return scene.generate(spec), RobotPose(0.0, 0.0, yaw)


def pattern_for(distance, cfg):
    if distance <= cfg.tracking.lidar_switch_distance:
        return BeamPattern.dense()
    return BeamPattern.sparse()


def cone_error(state, truth):
    if state.cone is None:
        return None
    return float(np.hypot(*(state.cone.centroid[:2] - truth[:2])))


def evaluate_scene(bench, pose, cfg, seed=0):
    """Scan one scene and score the cone and hole detections against ground truth"""
    distance = float(np.hypot(*(np.asarray(bench.centre) - pose.position[:2])))
    result = scene.scan(bench, pose, pattern_for(distance, cfg), seed=seed, mount_height=cfg.geometry.mount_height)
    state, detection, record = pipeline.process_frame(result.cloud, pose, TrackState(), cfg)
    outcome = {
        "cone_error": cone_error(state, result.hole_centre),
        "detected": False,
        "stage": None,
        "centre_error": None,
        "radius_error": None,
    }
    if detection is None:
        logger.debug(f"Scene {seed} at {distance:.2f} m missed: {record.miss}")
        return outcome

    true_radius = bench.spec.hole_radius
    outcome.update(
        {
            "detected": True,
            "stage": detection.stage.value,
            "centre_error": float(np.hypot(*(detection.centre_3d[:2] - result.hole_centre[:2]))),
            "radius_error": abs(detection.radius - true_radius) / true_radius,
        }
    )
    return outcome


def cone_failed(outcome):
    return outcome["cone_error"] is None or outcome["cone_error"] > CONE_CENTROID_TOLERANCE


def approach_sequence(distances=APPROACH_DISTANCES, seed=0, cfg=None):
    """
    Replay one straight approach on a seeded bench through the tracker.

    The robot drives along +x towards the cone; the tracker state carries over
    between frames, so the LiDAR switch and the projection settings follow the
    approach as they would on the robot.

    Returns:
        One row per distance with the stage, camera and detected hole size
    """
    if cfg is None:
        cfg = load_pipeline_config(None, {"seed": seed})
    bench, _ = bench_scene(seed, 0.0)
    centre = np.asarray(bench.centre, dtype=float)
    state = TrackState()
    rows = []
    for distance in distances:
        pose = RobotPose(float(centre[0] - distance), float(centre[1]))
        result = scene.scan(bench, pose, pattern_for(distance, cfg), seed=seed, mount_height=cfg.geometry.mount_height)
        state, detection, record = pipeline.process_frame(result.cloud, pose, state, cfg)
        row = {
            "distance": float(distance),
            "active_lidar": state.active_lidar.value,
            "cone_error": cone_error(state, result.hole_centre),
            "stage": None,
            "pixel_radius": None,
            "radius": None,
            "centre_error": None,
            "miss": record.miss,
        }
        if detection is not None:
            row.update(
                {
                    "stage": detection.stage.value,
                    "pixel_radius": detection.pixel_radius,
                    "radius": detection.radius,
                    "centre_error": float(np.hypot(*(detection.centre_3d[:2] - result.hole_centre[:2]))),
                }
            )
        logger.info(f"Approach at {distance:.2f} m: stage {row['stage']}, miss {record.miss}")
        rows.append(row)
    return rows


def pooled_rate(rows, key):
    scenes = sum(row["scenes"] for row in rows)
    return sum(row[key] for row in rows) / scenes if scenes else None


@celery.task(name="distance_sweep", bind=True)
def distance_sweep(self, distances=SWEEP_DISTANCES, scenes=50, seed=0, config_path=None):
    """
    Cone and hole failure rates against sensor distance.

    A cone fails when no cluster is extracted or its centroid is more than
    CONE_CENTROID_TOLERANCE off the hole axis. A hole fails when nothing is
    detected or the reported centre is off by more than the hole radius.
    """
    try:
        cfg = load_pipeline_config(config_path, {"seed": seed})
        rows = []
        for distance in distances:
            cone_failures, failures = 0, 0
            for index in range(scenes):
                scene_seed = seed + index
                bench, pose = bench_scene(scene_seed, float(distance))
                outcome = evaluate_scene(bench, pose, cfg, scene_seed)
                cone_failures += cone_failed(outcome)
                if not outcome["detected"] or outcome["centre_error"] > bench.spec.hole_radius:
                    failures += 1
            rows.append(
                {
                    "distance": float(distance),
                    "scenes": scenes,
                    "cone_failures": cone_failures,
                    "cone_failure_rate": cone_failures / scenes,
                    "failures": failures,
                    "failure_rate": failures / scenes,
                }
            )
            logger.info(f"Distance {distance:.1f} m: {cone_failures} cone and {failures} hole failures of {scenes}")

        switch = cfg.tracking.lidar_switch_distance
        near = [row for row in rows if row["distance"] <= switch]
        far = [row for row in rows if row["distance"] > switch]
        return {
            "kind": "distance",
            "rows": rows,
            "near_cone_failure_rate": pooled_rate(near, "cone_failures"),
            "far_cone_failure_rate": pooled_rate(far, "cone_failures"),
        }

    except Exception as e:
        logger.error(f"Distance sweep failed: {str(e)}", exc_info=True)
        raise


@celery.task(name="detection_sweep", bind=True)
def detection_sweep(self, scenes=200, max_distance=1.0, seed=0, config_path=None):
    """Close-range detection rate and accuracy over random hole diameters"""
    try:
        cfg = load_pipeline_config(config_path, {"seed": seed})
        rng = np.random.default_rng(seed)
        distances = rng.uniform(0.2, max_distance, scenes)
        outcomes = []
        for index, distance in enumerate(distances):
            bench, pose = bench_scene(seed + index, float(distance))
            outcomes.append(evaluate_scene(bench, pose, cfg, seed + index))

        detected = [o for o in outcomes if o["detected"]]
        centre_errors = [o["centre_error"] for o in detected]
        summary = {
            "kind": "detection",
            "scenes": scenes,
            "detected": len(detected),
            "detection_rate": len(detected) / scenes if scenes else 0.0,
            "fine": sum(1 for o in detected if o["stage"] == Stage.fine.value),
            "max_centre_error": max(centre_errors) if centre_errors else None,
            "mean_centre_error": float(np.mean(centre_errors)) if centre_errors else None,
            "max_radius_error": max((o["radius_error"] for o in detected), default=None),
        }
        logger.info(f"Detection sweep: {summary['detected']}/{scenes} detected")
        return summary

    except Exception as e:
        logger.error(f"Detection sweep failed: {str(e)}", exc_info=True)
        raise


@celery.task(name="phantom_sweep", bind=True)
def phantom_sweep(self, scenes=100, distance=0.5, seed=0, config_path=None):
    """How often the central hole wins over a pit on the cone flank"""
    try:
        cfg = load_pipeline_config(config_path, {"seed": seed})
        rng = np.random.default_rng(seed)
        bearings = rng.uniform(0.0, 360.0, scenes)
        central = 0
        for index, bearing in enumerate(bearings):
            pit = Pit(float(bearing), PHANTOM_DEPTH, PHANTOM_RADIUS)
            bench, pose = bench_scene(seed + index, distance, pits=(pit,))
            outcome = evaluate_scene(bench, pose, cfg, seed + index)
            if outcome["detected"] and outcome["centre_error"] <= bench.spec.hole_radius:
                central += 1
        logger.info(f"Phantom sweep: central hole selected in {central}/{scenes} scenes")
        return {"kind": "phantom", "scenes": scenes, "central": central, "central_rate": central / scenes if scenes else 0.0}

    except Exception as e:
        logger.error(f"Phantom sweep failed: {str(e)}", exc_info=True)
        raise


@celery.task(name="approach_sweep", bind=True)
def approach_sweep(self, scenes=1, seed=0, config_path=None):
    """Approach replays over `scenes` seeded benches"""
    try:
        cfg = load_pipeline_config(config_path, {"seed": seed})
        runs = [approach_sequence(APPROACH_DISTANCES, seed + index, cfg) for index in range(scenes)]
        return {"kind": "approach", "distances": list(APPROACH_DISTANCES), "runs": runs}

    except Exception as e:
        logger.error(f"Approach sweep failed: {str(e)}", exc_info=True)
        raise


SWEEPS = {
    "distance": distance_sweep,
    "detection": detection_sweep,
    "phantom": phantom_sweep,
    "approach": approach_sweep,
}
