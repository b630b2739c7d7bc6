from dataclasses import replace

import numpy as np
from scipy import ndimage

from blasthole.models.detection import FrstMaps, RegionOfInterest
from blasthole.utils.exceptions import InvalidInputError
from blasthole.utils.logger import logger

UNIT_GRADIENT_TOL = 1e-3


def round_half_away(values):
    values = np.asarray(values, dtype=float)
    return (np.sign(values) * np.floor(np.abs(values) + 0.5)).astype(int)


def affected_pixels(p, g, n):
    """
    Positively and negatively affected pixels of gradient pixel p at radius n.

    Args:
        p: (u, v) pixel
        g: unit gradient direction (gx, gy)
        n: radius in pixels

    Returns:
        (p_plus, p_minus) as integer (u, v) tuples
    """
    g = np.asarray(g, dtype=float)
    if abs(float(np.hypot(g[0], g[1])) - 1.0) > UNIT_GRADIENT_TOL:
        raise InvalidInputError(f"Gradient direction must be unit-norm, got {g}")
    offset = round_half_away(g * n)
    p = np.asarray(p, dtype=int)
    return tuple(int(c) for c in p + offset), tuple(int(c) for c in p - offset)


def radii_for(r_min, r_max, cfg):
    """Radius sweep around the admissible hole radii, in pixels"""
    low = r_min * (1.0 - cfg.radius_sweep)
    high = r_max * (1.0 + cfg.radius_sweep)
    return tuple(float(r) for r in np.linspace(low, high, cfg.radius_steps))


def with_radii(cfg, r_min, r_max):
    return replace(cfg, radii=radii_for(r_min, r_max, cfg))


def vote(shape, pixels, offsets, weights):
    """Scatter-add weights at pixels + offsets, dropping votes outside the raster"""
    target = pixels + offsets
    inside = (
        (target[:, 0] >= 0)
        & (target[:, 0] < shape[1])
        & (target[:, 1] >= 0)
        & (target[:, 1] < shape[0])
    )
    flat = np.ravel_multi_index((target[inside, 1], target[inside, 0]), shape)
    return np.bincount(flat, weights=weights[inside], minlength=shape[0] * shape[1]).reshape(shape)


def normalized(raster):
    peak = float(np.abs(raster).max()) if raster.size else 0.0
    return raster / peak if peak > 0 else raster


def frst(grad, cfg):
    """
    Fast radial symmetry transform over cfg.radii.

    Every edge pixel votes +1 / +|g| at its positively affected pixel and
    -1 / -|g| at its negatively affected pixel. Dark disks on a bright face
    collect negative votes at their centres; the combined map is negated so
    those centres come out positive.

    Returns:
        FrstMaps with per-radius orientation and magnitude projections
    """
    shape = grad.shape
    pixels = grad.edge_pixels(cfg.noise_floor)
    directions = np.column_stack([grad.gx[pixels[:, 1], pixels[:, 0]], grad.gy[pixels[:, 1], pixels[:, 0]]])
    magnitudes = grad.magnitude[pixels[:, 1], pixels[:, 0]]
    ones = np.ones(len(pixels))

    orientation, magnitude, symmetry = [], [], []
    for radius in cfg.radii:
        offset = round_half_away(directions * radius).reshape(-1, 2)
        o_n = vote(shape, pixels, offset, ones) - vote(shape, pixels, -offset, ones)
        m_n = vote(shape, pixels, offset, magnitudes) - vote(shape, pixels, -offset, magnitudes)
        f_n = np.abs(normalized(o_n)) ** cfg.alpha * normalized(m_n)
        symmetry.append(ndimage.gaussian_filter(f_n, cfg.gaussian_sigma(radius), mode="constant"))
        orientation.append(o_n)
        magnitude.append(m_n)

    combined = -np.mean(symmetry, axis=0) if symmetry else np.zeros(shape)
    return FrstMaps(tuple(cfg.radii), orientation, magnitude, combined)


def peak_pixels(symmetry, threshold, min_separation):
    """Greedy non-adjacent local maxima above threshold, strongest first"""
    local_max = (symmetry == ndimage.maximum_filter(symmetry, size=3, mode="constant")) & (
        symmetry >= threshold
    ) & (symmetry > 0)
    rows, cols = np.nonzero(local_max)
    order = np.lexsort((cols, rows, -symmetry[rows, cols]))

    peaks = []
    for index in order:
        candidate = np.array([cols[index], rows[index]], dtype=float)
        if all(np.hypot(*(candidate - kept)) >= min_separation for kept in peaks):
            peaks.append(candidate)
    return peaks


def feature_count(maps, hint, window):
    """Dark-polarity orientation votes around the hint, best radius wins"""
    u, v = int(hint[0]), int(hint[1])
    best_count, best_radius = 0, maps.radii[0]
    for radius, o_n in zip(maps.radii, maps.orientation):
        patch = o_n[max(v - window, 0) : v + window + 1, max(u - window, 0) : u + window + 1]
        count = float(-patch.sum())
        if count > best_count:
            best_count, best_radius = count, radius
    return int(round(best_count)), best_radius


def extract_rois(maps, grad, cfg):
    """
    Regions of interest around the strongest symmetry peaks.

    Each ROI keeps the ridge edge pixels (one pixel across the edge) in the annulus
    [min radius * (1 - margin), max radius * (1 + margin)] around its peak.
    """
    if not maps.radii:
        return []
    peak = float(maps.symmetry.max())
    if peak <= 0:
        return []

    r_min, r_max = min(maps.radii), max(maps.radii)
    step = (r_max - r_min) / max(len(maps.radii) - 1, 1)
    window = max(1, int(np.ceil(step / 2.0)))
    inner = r_min * (1.0 - cfg.roi_radius_margin)
    outer = r_max * (1.0 + cfg.roi_radius_margin)
    edges = grad.ridge_pixels(cfg.noise_floor)

    rois = []
    for hint in peak_pixels(maps.symmetry, cfg.peak_threshold * peak, r_min):
        distance = np.hypot(edges[:, 0] - hint[0], edges[:, 1] - hint[1])
        members = edges[(distance >= inner) & (distance <= outer)]
        count, radius = feature_count(maps, hint, window)
        if len(members) == 0 or count < 1:
            continue
        rois.append(RegionOfInterest((float(hint[0]), float(hint[1])), members.astype(float), count, radius))

    logger.debug(f"FRST produced {len(rois)} region(s) of interest")
    return rois
