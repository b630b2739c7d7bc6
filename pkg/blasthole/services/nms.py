from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from blasthole.utils.constants import Gate
from blasthole.utils.exceptions import NoHoleError
from blasthole.utils.logger import logger

LOG_3 = np.log(3.0)
LOG_50 = np.log(50.0)


@dataclass(frozen=True)
class GateResult:
    passed: bool
    gate: Optional[Gate] = None


def score_frst(feature_count):
    """1 / (1 + 3 exp(3 - 0.1 |F|))"""
    return float(expit(-(3.0 - 0.1 * feature_count + LOG_3)))


def score_reg(centre, image_centre):
    """1.2 / (1 + 50 exp(0.05 |d| - 5.5)), d in pixels"""
    distance = float(np.hypot(*(np.asarray(centre, dtype=float) - np.asarray(image_centre, dtype=float))))
    return 1.2 * float(expit(-(0.05 * distance - 5.5 + LOG_50)))


def bin_errors(points, circle, bins):
    """Angular bin index and squared normalized radial error of every point"""
    points = np.asarray(points, dtype=float)
    v = (points - circle.centre) / circle.r
    errors = (1.0 - np.hypot(v[:, 0], v[:, 1])) ** 2
    angles = np.arctan2(v[:, 1], v[:, 0])
    index = np.floor((angles + np.pi) / (2.0 * np.pi) * bins).astype(int)
    return np.clip(index, 0, bins - 1), errors


def incremental_bin_mse(index, errors, bins):
    """Running per-bin mean of the errors; bins nobody fell into stay empty (count 0)"""
    mse = np.zeros(bins)
    counts = np.zeros(bins, dtype=int)
    for b, error in zip(index, errors):
        counts[b] += 1
        mse[b] += (error - mse[b]) / counts[b]
    return mse, counts


def score_circularity(points, circle, cfg):
    """
    Angular-coverage-aware circularity.

    Points are binned by angle around the circle centre; every occupied bin
    scores exp(-mse / (2 sigma^2)) and empty bins score 0.
    """
    if len(points) == 0:
        return 0.0
    index, errors = bin_errors(points, circle, cfg.bins)
    mse, counts = incremental_bin_mse(index, errors, cfg.bins)
    scores = np.where(counts > 0, np.exp(-mse / (2.0 * cfg.sigma**2)), 0.0)
    return float(scores.sum() / cfg.bins)


def score_candidate(candidate, image_centre, cfg):
    """Fill in every score of a fitted candidate"""
    candidate.score_frst = score_frst(candidate.roi.feature_count)
    candidate.score_reg = score_reg(candidate.circle.centre, image_centre)
    candidate.score_circle = score_circularity(candidate.roi.pixels, candidate.circle, cfg)
    candidate.centre_offset = float(
        np.hypot(*(candidate.circle.centre - np.asarray(image_centre, dtype=float)))
    )
    candidate.score_conf = (
        cfg.alpha_1 * candidate.score_frst + cfg.alpha_2 * candidate.score_reg + candidate.score_circle
    )
    return candidate


def gates(candidate, img, cfg):
    """
    Check a scored candidate against every gate in order.

    Returns:
        GateResult naming the first gate that failed
    """
    low, high = cfg.radius_range
    checks = (
        (Gate.radius_range, lambda: low <= candidate.circle.r <= high),
        (Gate.circularity, lambda: candidate.score_circle >= cfg.circularity_threshold),
        (
            Gate.black_fraction,
            lambda: img.black_fraction(candidate.circle.mask(img.shape)) >= cfg.black_fraction_min,
        ),
        (Gate.centrality, lambda: candidate.score_reg >= cfg.centrality_threshold),
        (Gate.frst, lambda: candidate.score_frst >= cfg.frst_threshold),
    )
    for gate, check in checks:
        if not check():
            return GateResult(False, gate)
    return GateResult(True)


def select_best(candidates):
    """
    Maximum-confidence candidate.

    Ties go to the larger circularity score, then to the circle nearer the
    image centre.

    Raises:
        NoHoleError: no candidate survived the gates
    """
    if not candidates:
        raise NoHoleError("No hole candidate survived the gates")
    best = max(
        candidates,
        key=lambda candidate: (candidate.score_conf, candidate.score_circle, -candidate.centre_offset),
    )
    logger.debug(f"Selected candidate with confidence {best.score_conf:.3f}")
    return best
