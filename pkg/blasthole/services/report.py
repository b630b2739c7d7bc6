import os

from blasthole.schemas.report import frame_report_schema, mission_log_schema
from blasthole.utils import io
from blasthole.utils.logger import logger

# debug raster -> (file name, writer)
DEBUG_IMAGES = {
    "coarse_depth": ("coarse_depth.pgm", io.write_depth_pgm),
    "coarse_binary": ("coarse_binary.pgm", io.write_binary_pgm),
    "fine_depth": ("fine_depth.pgm", io.write_depth_pgm),
    "fine_binary": ("fine_binary.pgm", io.write_binary_pgm),
    "gradient": ("gradient.pgm", lambda path, image: io.write_map_pgm(path, image.magnitude)),
    "frst": ("frst.pgm", io.write_map_pgm),
}


def frame_report(record, include_timings=True):
    """
    JSON-ready report of one processed frame.

    Wall-clock timings are kept under their own key so the rest of the
    report is reproducible byte for byte.
    """
    report = frame_report_schema.dump(record)
    if include_timings:
        report["timings"] = dict(record.timings)
    return report


def write_debug_images(record, out_dir):
    """
    Write one PGM per pipeline stage present in the record.

    Returns:
        List of written file names
    """
    written = []
    for key, (name, writer) in DEBUG_IMAGES.items():
        image = record.debug.get(key)
        if image is None:
            continue
        writer(os.path.join(out_dir, name), image)
        written.append(name)
    logger.info(f"Wrote {len(written)} debug images to {out_dir}")
    return written


def mission_report(log):
    """Run log with state timeline, per-hole outcomes and summary metrics"""
    return mission_log_schema.dump(log)
