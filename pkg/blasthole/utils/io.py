import csv
import json
import os

import numpy as np

from blasthole.models.cloud import PointCloud
from blasthole.utils.constants import Frame
from blasthole.utils.exceptions import InvalidInputError
from blasthole.utils.logger import logger

CLOUD_MAGIC = b"BHCL"
CLOUD_VERSION = 1
CLOUD_VERSION_LABELLED = 2
HEADER_DTYPE = np.dtype("<u4")
POINT_DTYPE = np.dtype("<f4")
PGM_DEPTH_MAX = 65535


def ensure_dir(path):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)


def write_pgm(path, raster, maxval, comments=()):
    """Binary (P5) PGM; 16-bit samples are big-endian as the format requires"""
    raster = np.asarray(raster)
    height, width = raster.shape
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = "P5\n" + "".join(f"# {comment}\n" for comment in comments) + f"{width} {height}\n{maxval}\n"
    ensure_dir(path)
    with open(path, "wb") as handle:
        handle.write(header.encode("ascii"))
        handle.write(np.clip(raster, 0, maxval).astype(dtype).tobytes())


def read_pgm(path):
    """
    Read a P5 PGM written by write_pgm.

    Returns:
        (raster, comments)
    """
    with open(path, "rb") as handle:
        data = handle.read()
    offset, comments, tokens = 0, [], []
    while len(tokens) < 4:
        end = data.index(b"\n", offset)
        line = data[offset:end].decode("ascii")
        offset = end + 1
        if line.startswith("#"):
            comments.append(line[1:].strip())
        else:
            tokens.extend(line.split())
    if tokens[0] != "P5":
        raise InvalidInputError(f"{path} is not a binary PGM")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    raster = np.frombuffer(data, dtype=dtype, count=width * height, offset=offset).reshape(height, width)
    return raster.astype(int), comments


def write_depth_pgm(path, image):
    """Depth raster in millimetres, 0 where nothing projected"""
    millimetres = np.where(image.valid, np.round(image.depth * 1000.0), 0)
    settings = image.settings
    comments = (
        f"z_cam {settings.z_cam:.6f}",
        f"fov {settings.fov:.6f}",
        f"focal {settings.focal:.6f}",
        f"cx {settings.cx:.6f}",
        f"cy {settings.cy:.6f}",
    )
    write_pgm(path, millimetres, PGM_DEPTH_MAX, comments)


def write_binary_pgm(path, image):
    write_pgm(path, np.where(image.mask, 255, 0), 255)


def write_map_pgm(path, values):
    """Real-valued map stretched to 0..255"""
    values = np.asarray(values, dtype=float)
    low, high = float(values.min()), float(values.max())
    scaled = (values - low) / (high - low) * 255.0 if high > low else np.zeros_like(values)
    write_pgm(path, np.round(scaled), 255)


def write_cloud_binary(path, cloud):
    """
    Native binary cloud: magic, uint32 version, uint32 count, count x 3
    little-endian float32; version 2 appends one uint8 label per point.
    """
    labelled = cloud.labels is not None
    version = CLOUD_VERSION_LABELLED if labelled else CLOUD_VERSION
    ensure_dir(path)
    with open(path, "wb") as handle:
        handle.write(CLOUD_MAGIC)
        handle.write(np.array([version, len(cloud.points)], dtype=HEADER_DTYPE).tobytes())
        handle.write(np.asarray(cloud.points, dtype=POINT_DTYPE).tobytes())
        if labelled:
            handle.write(np.asarray(cloud.labels, dtype=np.uint8).tobytes())


def read_cloud_binary(path, frame=Frame.body):
    with open(path, "rb") as handle:
        data = handle.read()
    if len(data) < 12 or data[:4] != CLOUD_MAGIC:
        raise InvalidInputError(f"{path} is not a binary cloud file")
    version, count = (int(v) for v in np.frombuffer(data, dtype=HEADER_DTYPE, count=2, offset=4))
    if version not in (CLOUD_VERSION, CLOUD_VERSION_LABELLED):
        raise InvalidInputError(f"Unsupported cloud version {version}")

    points_size = count * 3 * POINT_DTYPE.itemsize
    expected = 12 + points_size + (count if version == CLOUD_VERSION_LABELLED else 0)
    if len(data) != expected:
        raise InvalidInputError(f"{path} is truncated: {len(data)} bytes, expected {expected}")

    points = np.frombuffer(data, dtype=POINT_DTYPE, count=count * 3, offset=12).reshape(count, 3)
    labels = None
    if version == CLOUD_VERSION_LABELLED:
        labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=12 + points_size).copy()
    return PointCloud(points.astype(float), frame, labels)


def write_cloud_csv(path, cloud):
    ensure_dir(path)
    labels = cloud.labels if cloud.labels is not None else np.full(len(cloud.points), -1)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "y", "z", "label"])
        for (x, y, z), label in zip(cloud.points, labels):
            writer.writerow([f"{x:.6f}", f"{y:.6f}", f"{z:.6f}", int(label)])


def read_rows(path, required):
    """DictReader rows of a CSV file that must carry the required columns"""
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = [column for column in required if column not in (reader.fieldnames or [])]
        if missing:
            raise InvalidInputError(f"{path} is missing column(s) {', '.join(missing)}")
        return list(reader)


def read_cloud_csv(path, frame=Frame.body):
    rows = read_rows(path, ("x", "y", "z"))
    try:
        points = np.array([[float(row["x"]), float(row["y"]), float(row["z"])] for row in rows]).reshape(-1, 3)
        labels = None
        if rows and "label" in rows[0] and all(row["label"] not in ("", "-1") for row in rows):
            labels = np.array([int(row["label"]) for row in rows], dtype=np.uint8)
    except ValueError as error:
        raise InvalidInputError(f"{path}: {error}") from error
    return PointCloud(points, frame, labels)


def read_cloud(path, frame=Frame.body):
    """Load a cloud by extension (.csv, anything else is the binary format); empty clouds are rejected"""
    cloud = read_cloud_csv(path, frame) if path.lower().endswith(".csv") else read_cloud_binary(path, frame)
    if len(cloud.points) == 0:
        raise InvalidInputError(f"{path} holds no points")
    logger.debug(f"Read {len(cloud.points)} points from {path}")
    return cloud


def read_points_csv(path):
    """(N, 2) x,y points"""
    rows = read_rows(path, ("x", "y"))
    try:
        return np.array([[float(row["x"]), float(row["y"])] for row in rows]).reshape(-1, 2)
    except ValueError as error:
        raise InvalidInputError(f"{path}: {error}") from error


def write_json(path, document):
    """Sorted-key JSON so reports of identical runs are byte-identical"""
    ensure_dir(path)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, sort_keys=True, indent=2)
        handle.write("\n")


def write_json_lines(path, documents):
    ensure_dir(path)
    with open(path, "w", encoding="utf-8") as handle:
        for document in documents:
            handle.write(json.dumps(document, sort_keys=True) + "\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
