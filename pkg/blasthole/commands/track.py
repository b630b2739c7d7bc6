import os

import click

from blasthole.commands.options import config_option, load_config, out_option, seed_option
from blasthole.models.detection import TrackState
from blasthole.schemas.mission import pose_rows_schema
from blasthole.services import pipeline, report
from blasthole.utils import io
from blasthole.utils.exceptions import handle_errors
from blasthole.utils.logger import logger


@click.command("track")
@click.argument("cloud_dir")
@click.argument("poses_file")
@config_option
@seed_option
@out_option("out")
@handle_errors
def track_command(cloud_dir, poses_file, config_path, seed, out_dir):
    """
    Replay a frame sequence through the tracker.

    POSES_FILE is a CSV with a `file` column naming clouds in CLOUD_DIR and
    optional x, y, yaw, roll, pitch columns (radians).
    """
    cfg = load_config(config_path, seed)
    frames = pose_rows_schema.load(io.read_rows(poses_file, ("file",)))

    state, lines = TrackState(), []
    for name, pose in frames:
        cloud = io.read_cloud(os.path.join(cloud_dir, name))
        state, _, record = pipeline.process_frame(cloud, pose, state, cfg)
        line = report.frame_report(record)
        line["file"] = name
        line["lost"] = state.lost
        lines.append(line)

    path = os.path.join(out_dir, "track.jsonl")
    io.write_json_lines(path, lines)
    detected = sum(1 for line in lines if line["detection"] is not None)
    logger.info(f"Tracked {len(lines)} frames, {detected} with a detection")
    click.echo(f"{detected}/{len(lines)} frames detected, written to {path}")
