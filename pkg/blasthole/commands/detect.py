import os

import click

from blasthole.commands.options import config_option, load_config, out_option, seed_option
from blasthole.models.detection import TrackState
from blasthole.models.geometry import RobotPose
from blasthole.services import pipeline, report
from blasthole.utils import io
from blasthole.utils.exceptions import CoarseMiss, handle_errors
from blasthole.utils.logger import logger


@click.command("detect")
@click.argument("cloud")
@click.option("--roll", type=float, default=0.0, help="IMU roll in radians.")
@click.option("--pitch", type=float, default=0.0, help="IMU pitch in radians.")
@click.option("--yaw", type=float, default=0.0, help="Heading in radians.")
@config_option
@seed_option
@out_option("out")
@click.option("--debug-images", is_flag=True, help="Write one PGM per pipeline stage.")
@handle_errors
def detect_command(cloud, roll, pitch, yaw, config_path, seed, out_dir, debug_images):
    """Detect the blast hole in a single Body-frame CLOUD (.csv or binary)."""
    cfg = load_config(config_path, seed)
    frame = io.read_cloud(cloud)
    pose = RobotPose(roll=roll, pitch=pitch, yaw=yaw)

    _, detection, record = pipeline.process_frame(frame, pose, TrackState(), cfg)
    io.write_json(os.path.join(out_dir, "report.json"), report.frame_report(record))
    if debug_images:
        report.write_debug_images(record, out_dir)

    if detection is None:
        raise CoarseMiss(record.miss or "no detection")

    logger.info(f"Detection written to {out_dir}")
    x, y, _ = detection.centre_3d
    click.echo(f"{detection.stage.value} hole at ({x:.3f}, {y:.3f}) radius {detection.radius:.3f} m")
