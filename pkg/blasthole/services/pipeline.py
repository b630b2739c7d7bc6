import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from blasthole.models.detection import Candidate, HoleDetection, TrackState
from blasthole.services import camera, circle_fit, cone, frst, nms, raster
from blasthole.services.geometry import shadow_transform, transform_cloud
from blasthole.utils.constants import Color, Frame, Lidar, Stage
from blasthole.utils.exceptions import (
    CoarseMiss,
    DegenerateFitError,
    DetectionMiss,
    FineMiss,
    InvalidInputError,
    NoCircleError,
    NoHoleError,
    TrackLostError,
)
from blasthole.utils.logger import logger


@dataclass
class CoarseResult:
    pixel: tuple
    centre_3d: np.ndarray
    area: int
    binary: object
    gray: object


@dataclass
class FrameRecord:
    """Everything the per-frame JSON report needs"""

    frame: int
    stage: Optional[Stage] = None
    distance: Optional[float] = None
    active_lidar: Optional[Lidar] = None
    cone: Optional[dict] = None
    candidates: list = field(default_factory=list)
    detection: Optional[HoleDetection] = None
    miss: Optional[str] = None
    timings: dict = field(default_factory=dict)
    debug: dict = field(default_factory=dict)


@contextmanager
def timed(timings, name):
    """Record the wall time of a block in milliseconds"""
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = round((time.perf_counter() - start) * 1000.0, 3)


def coarse_min_area(image, hole_cfg, factor):
    """Half the pixel area of the smallest hole at ground level"""
    radius_px = hole_cfg.radius_min * image.settings.focal / image.ground_depth
    return factor * np.pi * radius_px**2


def coarse_detect(img, f, min_area=0.0, centrality=None, ground_tolerance=None, surface_kernel=None):
    """
    Coarse hole detection on a depth image projected from the cone centroid.

    The largest white blob is the cone; a black blob inside its bounds that
    does not touch the image border, is at least `min_area` pixels and lies
    within `centrality` pixels of the image centre is the hole.

    Args:
        img: DepthImage
        f: FilterConfig

    Returns:
        CoarseResult with the void centroid and its ground-level 3D estimate

    Raises:
        CoarseMiss: no qualifying void
    """
    kwargs = {}
    if ground_tolerance is not None:
        kwargs["ground_tolerance"] = ground_tolerance
    if surface_kernel is not None:
        kwargs["surface_kernel"] = surface_kernel

    gray = raster.close_and_blur(img, f)
    binary = raster.binarize(gray, f.binary_threshold, **kwargs)
    whites = raster.components(binary, Color.white)
    if not whites:
        raise CoarseMiss("no material in the projected image")

    body = whites[0]
    centre = np.array([img.settings.cx, img.settings.cy])
    if centrality is None:
        centrality = 0.25 * min(img.settings.width, img.settings.height)

    voids = [
        blob
        for blob in raster.components(binary, Color.black)
        if body.encloses(blob)
        and not raster.touches_border(blob, binary.shape)
        and blob.area >= min_area
        and np.hypot(*(np.asarray(blob.centroid) - centre)) <= centrality
    ]
    if not voids:
        raise CoarseMiss("no central void inside the cone")

    hole = voids[0]
    centre_3d = camera.back_project(hole.centroid, img.ground_depth, img.settings, img.camera_pose)
    logger.info(f"Coarse hole at pixel ({hole.centroid[0]:.1f}, {hole.centroid[1]:.1f}), area {hole.area}")
    return CoarseResult(hole.centroid, centre_3d, hole.area, binary, gray)


def fine_detect(cloud, blob_centre_3d, settings, f, cfg, cone_height=0.0, record=None):
    """
    Fine hole detection on a re-projection centred on the coarse hole.

    Runs close/blur, binarize, Sobel, FRST, RANSAC per ROI, gating and
    selection, then back-projects the winner.

    Args:
        cloud: Shadow-frame cloud of the cone (ConeDetection.points)
        blob_centre_3d: Ground-level hole estimate from the coarse stage
        settings: CameraSettings
        f: FilterConfig
        cfg: PipelineConfig
        cone_height: Cone height, sets the collar depth the pixel radii refer to

    Returns:
        HoleDetection (stage fine)

    Raises:
        FineMiss: no candidate survives
    """
    ground_point = np.array([blob_centre_3d[0], blob_centre_3d[1], 0.0])
    image = camera.project(cloud, ground_point, settings)
    gray = raster.close_and_blur(image, f)
    binary = raster.binarize(
        gray, f.binary_threshold, cfg.camera.ground_tolerance, cfg.camera.surface_kernel
    )
    gradient = raster.sobel(binary.to_gray(cfg.camera.edge_smoothing))

    r_min, r_max = camera.hole_pixel_radii(settings, image.ground_depth, cone_height, cfg.hole)
    frst_cfg = frst.with_radii(cfg.frst, r_min, r_max)
    maps = frst.frst(gradient, frst_cfg)
    rois = frst.extract_rois(maps, gradient, frst_cfg)

    nms_cfg = replace(cfg.nms, radius_range=(frst_cfg.radii[0], frst_cfg.radii[-1]))
    image_centre = (settings.cx, settings.cy)
    candidates, survivors = [], []
    for index, roi in enumerate(rois):
        try:
            circle, inliers = circle_fit.ransac_fit(roi, cfg.ransac, index)
        except (NoCircleError, DegenerateFitError, InvalidInputError) as error:
            logger.debug(f"ROI {index} skipped: {error}")
            continue
        candidate = nms.score_candidate(Candidate(circle, roi, inliers), image_centre, nms_cfg)
        result = nms.gates(candidate, binary, nms_cfg)
        candidate.rejected_by = result.gate
        candidates.append(candidate)
        if result.passed:
            survivors.append(candidate)

    if record is not None:
        record.candidates = [candidate.as_dict() for candidate in candidates]
        record.debug.update(
            {"fine_depth": image, "fine_binary": binary, "gradient": gradient, "frst": maps.symmetry}
        )

    try:
        best = nms.select_best(survivors)
    except NoHoleError as error:
        raise FineMiss(str(error)) from error

    centre_3d = camera.back_project(best.circle.centre, image.ground_depth, settings, image.camera_pose)
    collar_depth = image.ground_depth - cone_height
    radius = camera.metric_radius(image, best.circle, cfg.camera.ring_width, collar_depth)
    detection = HoleDetection(
        centre_3d=centre_3d,
        radius=radius,
        confidence=best.score_conf / nms_cfg.max_confidence,
        stage=Stage.fine,
        pixel_centre=(best.circle.a, best.circle.b),
        pixel_radius=best.circle.r,
        candidates=candidates,
    )
    logger.info(
        f"Fine hole at ({centre_3d[0]:.3f}, {centre_3d[1]:.3f}) radius {radius:.3f} m, "
        f"confidence {detection.confidence:.2f}"
    )
    return detection


def coarse_detection(result, image):
    """HoleDetection for a coarse-stage result; radius from the void's equivalent disk"""
    radius_px = np.sqrt(result.area / np.pi)
    radius = radius_px * image.ground_depth / image.settings.focal
    centre = (image.settings.cx, image.settings.cy)
    return HoleDetection(
        centre_3d=result.centre_3d,
        radius=float(radius),
        confidence=nms.score_reg(result.pixel, centre),
        stage=Stage.coarse,
        pixel_centre=tuple(result.pixel),
        pixel_radius=float(radius_px),
    )


def next_lidar(active, distance, cfg):
    """Dense below the switch distance, back to sparse only past the hysteresis band"""
    if active is Lidar.sparse and distance <= cfg.lidar_switch_distance:
        return Lidar.dense
    if active is Lidar.dense and distance > cfg.lidar_switch_distance + cfg.lidar_hysteresis:
        return Lidar.sparse
    return active


def to_shadow(frame, robot_pose, n_g):
    if frame.frame is Frame.shadow:
        return frame
    if frame.frame is not Frame.body:
        raise InvalidInputError(f"Expected a Body or Shadow frame cloud, got {frame.frame}")
    return transform_cloud(frame, shadow_transform(robot_pose, n_g))


def process_frame(frame, robot_pose, state, cfg):
    """
    One tracking step with a full report.

    Returns:
        (TrackState, HoleDetection or None, FrameRecord)
    """
    record = FrameRecord(frame=state.frame_index)
    state = replace(state, frame_index=state.frame_index + 1)

    with timed(record.timings, "tilt"):
        cloud = to_shadow(frame, robot_pose, cfg.geometry.ground_normal)

    hint = state.cone.centroid if state.cone is not None else None
    try:
        with timed(record.timings, "cone"):
            detected_cone = cone.extract_cone(cloud, cfg.cone, hint)
    except DetectionMiss as error:
        lost_frames = state.lost_frames + 1
        lost = lost_frames > cfg.tracking.track_lost_frames
        if lost:
            logger.warning(f"Cone lost for {lost_frames} consecutive frames")
        record.miss = f"cone: {error}"
        return replace(state, lost_frames=lost_frames, lost=lost), None, record

    distance = detected_cone.distance
    active = next_lidar(state.active_lidar, distance, cfg.tracking)
    state = replace(
        state,
        cone=detected_cone,
        target_distance=distance,
        active_lidar=active,
        lost_frames=0,
        lost=False,
    )
    record.distance = distance
    record.active_lidar = active
    record.cone = {
        "centroid": [float(c) for c in detected_cone.centroid],
        "height": detected_cone.height,
        "points": len(detected_cone.points),
    }

    settings, filter_config = camera.settings_for(
        distance, detected_cone.height, cfg.camera.lut, cfg.camera.width, cfg.camera.height
    )
    with timed(record.timings, "coarse"):
        image = camera.project(detected_cone.points, detected_cone.centroid, settings)
        record.debug["coarse_depth"] = image
        try:
            coarse = coarse_detect(
                image,
                filter_config,
                coarse_min_area(image, cfg.hole, cfg.tracking.coarse_min_area_factor),
                cfg.tracking.coarse_centrality * min(settings.width, settings.height),
                cfg.camera.ground_tolerance,
                cfg.camera.surface_kernel,
            )
        except CoarseMiss as error:
            record.miss = f"coarse: {error}"
            return state, None, record
    record.debug["coarse_binary"] = coarse.binary
    state = replace(state, coarse_centre=coarse.centre_3d)
    detection = coarse_detection(coarse, image)
    record.stage = Stage.coarse

    if distance <= cfg.tracking.fine_stage_distance:
        try:
            with timed(record.timings, "fine"):
                detection = fine_detect(
                    detected_cone.points,
                    coarse.centre_3d,
                    settings,
                    filter_config,
                    cfg,
                    detected_cone.height,
                    record,
                )
            record.stage = Stage.fine
        except FineMiss as error:
            record.miss = f"fine: {error}"
            logger.warning(f"Fine stage missed, keeping coarse estimate: {error}")

    record.detection = detection
    return replace(state, last_detection=detection), detection, record


def track_step(frame, robot_pose, state, cfg):
    """
    Advance the tracker by one frame.

    Returns:
        (TrackState, HoleDetection or None)
    """
    state, detection, _ = process_frame(frame, robot_pose, state, cfg)
    return state, detection


def require_track(state):
    if state.lost:
        raise TrackLostError(f"Cone lost for {state.lost_frames} consecutive frames")
    return state


def detect(frame, robot_pose, cfg):
    """
    Single-frame detection for the CLI.

    Returns:
        (HoleDetection, FrameRecord)

    Raises:
        CoarseMiss / FineMiss: nothing detected
    """
    _, detection, record = process_frame(frame, robot_pose, TrackState(), cfg)
    if detection is None:
        raise CoarseMiss(record.miss or "no detection")
    return detection, record
