import numpy as np

from blasthole.models.detection import Circle
from blasthole.utils.constants import DEGENERATE_FIT_TOL, RANSAC_CONVERGENCE
from blasthole.utils.exceptions import DegenerateFitError, InvalidInputError, NoCircleError
from blasthole.utils.logger import logger

MAX_GROWTH_STEPS = 20


def taubin_fit(points):
    """
    Taubin algebraic circle fit.

    The points are mean-centred, which reduces the generalized eigenproblem
    to the smallest right singular vector of [Z0, X, Y]; the circle is then
    un-centred.

    Args:
        points: (N, 2) array-like of (x, y), N >= 3

    Returns:
        Circle

    Raises:
        DegenerateFitError: collinear points or a near-infinite radius
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2 or len(points) < 3:
        raise DegenerateFitError("Circle fit needs at least 3 points")

    centroid = points.mean(axis=0)
    x = points[:, 0] - centroid[0]
    y = points[:, 1] - centroid[1]
    z = x * x + y * y
    z_mean = z.mean()
    if z_mean <= 0:
        raise DegenerateFitError("All points coincide")

    z0 = (z - z_mean) / (2.0 * np.sqrt(z_mean))
    _, _, vt = np.linalg.svd(np.column_stack([z0, x, y]), full_matrices=False)
    a_vec = vt[2].copy()
    if abs(a_vec[0]) < DEGENERATE_FIT_TOL:
        raise DegenerateFitError("Points are collinear")

    a_vec[0] = a_vec[0] / (2.0 * np.sqrt(z_mean))
    a_vec = np.append(a_vec, -z_mean * a_vec[0])
    a, b = -a_vec[1:3] / a_vec[0] / 2.0 + centroid
    radius = np.sqrt(a_vec[1] ** 2 + a_vec[2] ** 2 - 4.0 * a_vec[0] * a_vec[3]) / abs(a_vec[0]) / 2.0
    if not np.isfinite(radius) or radius <= 0:
        raise DegenerateFitError(f"Fit produced an unusable radius {radius}")
    return Circle(float(a), float(b), float(radius))


def grow(points, circle, tol):
    """
    Alternate inlier collection and refitting until the inlier set is stable.

    Returns:
        (circle, inlier mask); the circle is the Taubin fit of the mask
    """
    inliers = circle.residuals(points) <= tol
    for _ in range(MAX_GROWTH_STEPS):
        if inliers.sum() < 3:
            break
        refit = taubin_fit(points[inliers])
        delta = max(abs(refit.a - circle.a), abs(refit.b - circle.b), abs(refit.r - circle.r))
        circle = refit
        updated = circle.residuals(points) <= tol
        if np.array_equal(updated, inliers) or delta < RANSAC_CONVERGENCE:
            break
        inliers = updated
    else:
        if inliers.sum() >= 3:
            circle = taubin_fit(points[inliers])
    return circle, inliers


def required_iterations(inlier_ratio, seed_size, confidence, cap):
    if inlier_ratio >= 1.0:
        return 0
    if inlier_ratio <= 0.0:
        return cap
    denominator = np.log(1.0 - inlier_ratio**seed_size)
    if denominator >= 0:
        return cap
    return min(cap, int(np.ceil(np.log(1.0 - confidence) / denominator)))


def ransac_fit(roi, cfg, roi_index=0):
    """
    RANSAC around taubin_fit with inlier growth.

    Each retry fits a random seed, grows it to convergence and keeps the
    largest consensus. The random stream is derived from cfg.rng_seed and
    roi_index, so ROIs can be fit independently and reproducibly.

    Args:
        roi: RegionOfInterest
        cfg: RansacConfig
        roi_index: Position of the ROI in the frame's ROI list

    Returns:
        (Circle, (K, 2) inlier points)

    Raises:
        NoCircleError: no consensus reaches cfg.min_inliers
    """
    points = np.asarray(roi.pixels, dtype=float)
    if len(points) < cfg.seed_size:
        raise InvalidInputError(f"ROI has {len(points)} pixels, need {cfg.seed_size}")

    rng = np.random.default_rng(cfg.rng_seed ^ roi_index)
    best_circle, best_inliers, best_count = None, None, 0
    budget = cfg.max_retries
    retries = 0
    while retries < budget:
        retries += 1
        sample = rng.choice(len(points), cfg.seed_size, replace=False)
        try:
            circle, inliers = grow(points, taubin_fit(points[sample]), cfg.inlier_tol)
        except (DegenerateFitError, InvalidInputError):
            continue

        count = int(inliers.sum())
        if count > best_count:
            best_circle, best_inliers, best_count = circle, inliers, count
            ratio = count / len(points)
            if ratio >= 1.0:
                break
            budget = min(cfg.max_retries, required_iterations(ratio, cfg.seed_size, cfg.confidence, cfg.max_retries))

    if best_circle is None or best_count < cfg.min_inliers:
        raise NoCircleError(f"Best consensus {best_count} below {cfg.min_inliers} inliers")
    logger.debug(
        f"RANSAC circle ({best_circle.a:.1f}, {best_circle.b:.1f}) r={best_circle.r:.1f} "
        f"with {best_count}/{len(points)} inliers after {retries} retries"
    )
    return best_circle, points[best_inliers]
