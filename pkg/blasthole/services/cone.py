import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError, cKDTree

from blasthole.models.cloud import ConeDetection, PointCloud
from blasthole.utils.constants import (
    CLUSTER_CELL,
    CLUSTER_MIN_POINTS,
    DENOISE_MIN_NEIGHBORS,
    DENOISE_RADIUS,
    VOXEL_XY,
    Z_THRESHOLD,
)
from blasthole.utils.exceptions import CoarseMiss, DegenerateHullError, InvalidInputError
from blasthole.utils.logger import logger

EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def crop_and_clean(cloud, spec):
    """
    Keep points inside the forward corridor and outside every robot-body box.

    Args:
        cloud: PointCloud in Body or Shadow frame
        spec: CorridorSpec

    Returns:
        PointCloud (possibly empty)
    """
    points = cloud.points
    keep = (
        (points[:, 0] >= -spec.rear)
        & (points[:, 0] <= spec.length)
        & (np.abs(points[:, 1]) <= spec.width / 2.0)
    )
    for box in spec.boxes:
        keep &= ~box.contains(points)
    logger.debug(f"Corridor crop kept {int(keep.sum())}/{len(cloud)} points")
    return cloud.select(keep)


def split_ground(cloud, z_threshold=Z_THRESHOLD):
    """Partition into (ground, above) by z >= z_threshold"""
    above = cloud.points[:, 2] >= z_threshold
    return cloud.select(~above), cloud.select(above)


def denoise(cloud, radius=DENOISE_RADIUS, min_neighbors=DENOISE_MIN_NEIGHBORS):
    """Drop points with fewer than `min_neighbors` other points within `radius`"""
    if radius <= 0:
        raise InvalidInputError(f"Denoise radius must be positive, got {radius}")
    if min_neighbors <= 0 or len(cloud) == 0:
        return cloud
    tree = cKDTree(cloud.points)
    # the nearest hit is the point itself; the farthest of the k must still lie inside the radius
    distances, _ = tree.query(cloud.points, k=min_neighbors + 1, distance_upper_bound=radius)
    keep = np.isfinite(distances[:, -1])
    logger.debug(f"Denoise removed {int((~keep).sum())} flying points")
    return cloud.select(keep)


def cluster_cone(above, min_points=CLUSTER_MIN_POINTS, cell=CLUSTER_CELL):
    """
    Occupancy-grid clustering of above-ground points.

    Points are binned into `cell`-sized XY cells; 8-connected occupied cells form
    one cluster. Clusters under `min_points` are dropped and the rest are
    returned largest first.
    """
    if len(above) == 0:
        return []
    xy = above.points[:, :2]
    index = np.floor((xy - xy.min(axis=0)) / cell).astype(int)
    grid = np.zeros(tuple(index.max(axis=0) + 1), dtype=bool)
    grid[index[:, 0], index[:, 1]] = True

    labelled, count = ndimage.label(grid, structure=EIGHT_CONNECTED)
    point_labels = labelled[index[:, 0], index[:, 1]]
    sizes = np.bincount(point_labels, minlength=count + 1)

    ranked = sorted(
        (label for label in range(1, count + 1) if sizes[label] >= min_points),
        key=lambda label: (-sizes[label], label),
    )
    return [above.select(point_labels == label) for label in ranked]


def weighted_centroid(cone, voxel_xy=VOXEL_XY):
    """
    Height-weighted XY centroid of a cone cluster.

    Each occupied XY voxel contributes its centre weighted by its highest point,
    so a scan that only sees one flank is pulled toward the tall apex. The
    returned z is the plain mean height of the cluster.
    """
    if len(cone) == 0:
        raise InvalidInputError("Cannot compute the centroid of an empty cloud")
    xy = cone.points[:, :2]
    origin = xy.min(axis=0)
    index = np.floor((xy - origin) / voxel_xy).astype(int)
    voxels, inverse = np.unique(index, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)

    heights = np.full(len(voxels), -np.inf)
    np.maximum.at(heights, inverse, cone.points[:, 2])
    weights = np.clip(heights, 0.0, None)
    if weights.sum() <= 0:
        weights = np.ones(len(voxels))

    centres = origin + (voxels + 0.5) * voxel_xy
    centroid_xy = (centres * weights[:, None]).sum(axis=0) / weights.sum()
    return np.array([centroid_xy[0], centroid_xy[1], cone.points[:, 2].mean()])


def points_inside_hull(hull, xy, margin=1e-9):
    """Strict half-plane test against every hull facet"""
    if len(xy) == 0:
        return np.zeros(0, dtype=bool)
    offsets = xy @ hull.equations[:, :2].T + hull.equations[:, 2]
    return np.all(offsets < -margin, axis=1)


def hull_filter(cone, ground, voxel_xy=VOXEL_XY):
    """
    Convex-hull footprint of a cone cluster with pit backfill.

    Low points whose XY falls strictly inside the hull (pit floors, the funnel
    below the height threshold) are kept with the cone so they project as
    surface rather than as voids.

    Raises:
        DegenerateHullError: fewer than three non-collinear footprint points
    """
    xy = cone.points[:, :2]
    if len(xy) < 3:
        raise DegenerateHullError(f"Hull needs at least 3 points, got {len(xy)}")
    try:
        hull = ConvexHull(xy)
    except QhullError as error:
        raise DegenerateHullError(f"Cone footprint is degenerate: {error}") from error

    inside = points_inside_hull(hull, ground.points[:, :2])
    backfill = ground.select(inside)
    logger.debug(f"Hull backfilled {len(backfill)} low points inside the cone footprint")

    return ConeDetection(
        centroid=weighted_centroid(cone, voxel_xy),
        height=float(cone.points[:, 2].max()),
        points=PointCloud.concatenate([cone, backfill], cone.frame),
        hull_xy=xy[hull.vertices],
    )


def extract_cone(cloud, cfg, hint=None):
    """
    Full cone extraction on a tilt-corrected cloud.

    Args:
        cloud: PointCloud in Shadow frame
        cfg: ConeConfig
        hint: Optional XY of the previously tracked cone; the nearest cluster wins

    Returns:
        ConeDetection

    Raises:
        CoarseMiss: no cluster qualifies as a cone
    """
    cropped = crop_and_clean(cloud, cfg.corridor)
    ground, above = split_ground(cropped, cfg.z_threshold)
    above = denoise(above, cfg.denoise_radius, cfg.denoise_min_neighbors)
    clusters = cluster_cone(above, cfg.cluster_min_points, cfg.cluster_cell)
    if not clusters:
        raise CoarseMiss("no cone cluster in the corridor")

    chosen = clusters[0]
    if hint is not None and len(clusters) > 1:
        hint = np.asarray(hint, dtype=float)[:2]
        chosen = min(
            clusters,
            key=lambda cluster: np.linalg.norm(cluster.points[:, :2].mean(axis=0) - hint),
        )

    detection = hull_filter(chosen, ground, cfg.voxel_xy)
    logger.info(
        f"Cone at ({detection.centroid[0]:.2f}, {detection.centroid[1]:.2f}) "
        f"height {detection.height:.2f} m from {len(clusters)} cluster(s)"
    )
    return detection
