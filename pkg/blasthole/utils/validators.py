import numpy as np
from marshmallow import ValidationError

from blasthole.utils.constants import UNIT_NORM_TOL


def validate_odd_kernel(value):
    """Ensure a kernel size is odd and at least 1."""
    if value < 1 or value % 2 == 0:
        raise ValidationError("Kernel size must be an odd integer >= 1.")


def validate_unit_vector(value):
    """Ensure a 3-vector has unit norm."""
    if len(value) != 3:
        raise ValidationError("Vector must have exactly three components.")
    if not is_unit(value, tol=1e-6):
        raise ValidationError("Vector must have unit norm.")


def validate_box(value):
    """Ensure an axis-aligned box has min < max on every axis."""
    if len(value) != 2 or any(len(corner) != 3 for corner in value):
        raise ValidationError("Box must be [[xmin, ymin, zmin], [xmax, ymax, zmax]].")
    low, high = value
    if any(lo >= hi for lo, hi in zip(low, high)):
        raise ValidationError("Box minimum must be below maximum on every axis.")


def validate_lut_rows(rows):
    """
    Validates projection look-up table rows:
    - distances strictly increasing
    - z_cam and kernel sizes non-decreasing with distance
    """
    if not rows:
        raise ValidationError("Projection look-up table must not be empty.")
    for previous, current in zip(rows, rows[1:]):
        if current.distance <= previous.distance:
            raise ValidationError("LUT distances must be strictly increasing.")
        if current.z_cam < previous.z_cam:
            raise ValidationError("LUT camera heights must not decrease with distance.")
        if (
            current.filter.morph_kernel < previous.filter.morph_kernel
            or current.filter.blur_kernel < previous.filter.blur_kernel
        ):
            raise ValidationError("LUT kernel sizes must not decrease with distance.")


def is_unit(vector, tol=UNIT_NORM_TOL):
    return abs(float(np.linalg.norm(vector)) - 1.0) <= tol
