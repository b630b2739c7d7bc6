import numpy as np

from blasthole.models.cloud import PointCloud
from blasthole.models.geometry import RigidTransform, as_vec3
from blasthole.utils.constants import GROUND_NORMAL, PARALLEL_TOL, Frame
from blasthole.utils.exceptions import DegenerateAxisError, InvalidInputError
from blasthole.utils.validators import is_unit

E_X = np.array([1.0, 0.0, 0.0])
E_Y = np.array([0.0, 1.0, 0.0])
E_Z = np.array([0.0, 0.0, 1.0])


def skew(vector):
    x, y, z = vector
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def require_unit(vector, name):
    vector = as_vec3(vector)
    if not is_unit(vector):
        raise InvalidInputError(f"{name} must be unit-norm, got norm {np.linalg.norm(vector)}")
    return vector


def exp_map(axis, angle):
    """
    Rodrigues rotation of `angle` radians about a unit `axis`.

    Args:
        axis: Unit 3-vector
        angle: Rotation angle in radians

    Returns:
        3x3 rotation matrix
    """
    axis = require_unit(axis, "Rotation axis")
    if not np.isfinite(angle):
        raise InvalidInputError(f"Rotation angle must be finite, got {angle}")
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def align_rotation(n_r, n_g):
    """
    Rotation taking the robot base normal `n_r` onto the ground normal `n_g`.

    Args:
        n_r: Unit robot base normal
        n_g: Unit ground normal

    Returns:
        (axis, angle, R_align) with angle in [0, pi]

    Raises:
        DegenerateAxisError: normals are antiparallel
    """
    n_r = require_unit(n_r, "Robot normal")
    n_g = require_unit(n_g, "Ground normal")

    cross = np.cross(n_r, n_g)
    sine = float(np.linalg.norm(cross))
    cosine = float(np.dot(n_r, n_g))

    if sine < PARALLEL_TOL:
        if cosine > 0:
            return n_g.copy(), 0.0, np.eye(3)
        raise DegenerateAxisError("Robot and ground normals are antiparallel")

    axis = cross / sine
    angle = float(np.arctan2(sine, cosine))
    return axis, angle, exp_map(axis, angle)


def shadow_frame_rotation(r_geo, n_g=GROUND_NORMAL):
    """
    Orientation correction taking Body-frame points into the robot's shadow frame.

    The shadow frame shares the robot's heading but lies flat on the ground,
    so applying the result to a Body-frame cloud levels the bench plane.
    """
    r_geo = np.asarray(r_geo, dtype=float)
    n_r = r_geo[:, 2]
    axis, angle, r_align = align_rotation(n_r, n_g)
    if angle == 0.0:
        return np.eye(3)
    r_shadow = r_align @ r_geo
    axis_shadow = r_shadow.T @ axis
    return exp_map(axis_shadow / np.linalg.norm(axis_shadow), -angle)


def transform_cloud(cloud, transform):
    """Apply a rigid transform to every point; the frame tag follows the transform's target"""
    frame = transform.target if transform.target is not None else cloud.frame
    return PointCloud(transform.apply(cloud.points), frame, cloud.labels)


def rotation_from_euler(roll=0.0, pitch=0.0, yaw=0.0):
    """Z-Y-X (yaw, pitch, roll) rotation, body to world"""
    return exp_map(E_Z, yaw) @ exp_map(E_Y, pitch) @ exp_map(E_X, roll)


def yaw_rotation(yaw):
    return exp_map(E_Z, yaw)


def pose_transform(pose, target=Frame.utm):
    """Body -> world transform of a robot pose"""
    rotation = rotation_from_euler(pose.roll, pose.pitch, pose.yaw)
    return RigidTransform(rotation, pose.position, Frame.body, target)


def shadow_transform(pose, n_g=GROUND_NORMAL):
    """Body -> Shadow transform (rotation only) for a robot pose"""
    rotation = shadow_frame_rotation(rotation_from_euler(pose.roll, pose.pitch, pose.yaw), n_g)
    return RigidTransform(rotation, np.zeros(3), Frame.body, Frame.shadow)


def tilt_correct(cloud, r_geo, n_g=GROUND_NORMAL):
    """Level a Body-frame cloud into the Shadow frame"""
    rotation = shadow_frame_rotation(r_geo, n_g)
    return transform_cloud(cloud, RigidTransform(rotation, np.zeros(3), Frame.body, Frame.shadow))


def is_rotation(matrix, tol=1e-9):
    matrix = np.asarray(matrix, dtype=float)
    return bool(
        matrix.shape == (3, 3)
        and np.allclose(matrix.T @ matrix, np.eye(3), atol=tol)
        and abs(np.linalg.det(matrix) - 1.0) < tol
    )
