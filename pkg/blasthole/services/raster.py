import numpy as np
from scipy import ndimage

from blasthole.models.raster import BinaryImage, Blob, GradientImage, GrayImage
from blasthole.utils.constants import GROUND_TOLERANCE, SURFACE_KERNEL, Color
from blasthole.utils.exceptions import ConfigError

EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def close_and_blur(img, f):
    """
    Fill sparsity voids in a depth image, then smooth it.

    Closing runs on surface height (negated depth, invalid = -inf) so gaps
    narrower than the structuring element are filled from their neighbours.
    The blur is a Gaussian restricted to valid pixels with renormalized
    weights.

    Args:
        img: DepthImage
        f: FilterConfig

    Returns:
        GrayImage of depths; invalid pixels hold inf
    """
    if max(f.morph_kernel, f.blur_kernel) > min(img.depth.shape):
        raise ConfigError(
            f"Kernel larger than the {img.depth.shape[1]}x{img.depth.shape[0]} image"
        )

    height = np.where(img.valid, -img.depth, -np.inf)
    if f.morph_kernel > 1:
        size = (f.morph_kernel, f.morph_kernel)
        height = ndimage.grey_closing(height, size=size, mode="nearest")
    valid = np.isfinite(height)
    depth = np.where(valid, -height, np.inf)

    if f.blur_kernel > 1 and f.blur_sigma > 0:
        truncate = ((f.blur_kernel - 1) / 2.0) / f.blur_sigma
        weights = valid.astype(float)
        filled = np.where(valid, depth, 0.0)
        numerator = ndimage.gaussian_filter(filled, f.blur_sigma, mode="constant", truncate=truncate)
        denominator = ndimage.gaussian_filter(weights, f.blur_sigma, mode="constant", truncate=truncate)
        with np.errstate(divide="ignore", invalid="ignore"):
            depth = np.where(valid, numerator / denominator, np.inf)

    return GrayImage(depth, valid, img.settings, img.camera_pose)


def binarize(img, threshold, ground_tolerance=GROUND_TOLERANCE, surface_kernel=SURFACE_KERNEL):
    """
    White where there is material at or above ground level.

    A valid pixel is white when its depth is no deeper than the ground plane
    (within ground_tolerance) and it does not drop away from the nearest top
    surface in a surface_kernel window by more than `threshold` of its depth.
    """
    values = np.where(img.valid, img.values, np.inf)
    surface = ndimage.minimum_filter(values, size=surface_kernel, mode="nearest")
    white = (
        img.valid
        & np.isfinite(values)
        & (values <= img.ground_depth * (1.0 + ground_tolerance))
        & (values <= (1.0 + threshold) * surface)
    )
    return BinaryImage(white)


def sobel(img):
    """3x3 Sobel gradient with zeroed borders"""
    values = np.where(np.isfinite(img.values), img.values, 0.0).astype(float)
    gx = ndimage.sobel(values, axis=1)
    gy = ndimage.sobel(values, axis=0)
    for channel in (gx, gy):
        channel[0, :] = channel[-1, :] = 0.0
        channel[:, 0] = channel[:, -1] = 0.0

    magnitude = np.hypot(gx, gy)
    nonzero = magnitude > 0
    unit_x = np.zeros_like(gx)
    unit_y = np.zeros_like(gy)
    unit_x[nonzero] = gx[nonzero] / magnitude[nonzero]
    unit_y[nonzero] = gy[nonzero] / magnitude[nonzero]
    return GradientImage(magnitude, unit_x, unit_y)


def components(img, color=Color.white):
    """8-connected blobs of one colour, largest first"""
    color = Color(color)
    target = img.mask if color is Color.white else ~img.mask
    labelled, count = ndimage.label(target, structure=EIGHT_CONNECTED)
    if count == 0:
        return []

    rows, cols = np.nonzero(labelled)
    labels = labelled[rows, cols]
    order = np.argsort(labels, kind="stable")
    sizes = np.bincount(labels, minlength=count + 1)[1:]
    groups = np.split(np.column_stack([cols, rows])[order], np.cumsum(sizes)[:-1])

    blobs = [Blob.from_pixels(pixels) for pixels in groups]
    ranked = sorted(range(count), key=lambda index: (-blobs[index].area, index))
    return [blobs[index] for index in ranked]


def touches_border(blob, shape):
    u_min, v_min, u_max, v_max = blob.bbox
    return u_min == 0 or v_min == 0 or u_max == shape[1] - 1 or v_max == shape[0] - 1
