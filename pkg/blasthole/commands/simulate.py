import os

import click

from blasthole.commands.options import config_option, load_config, out_option, seed_option
from blasthole.schemas.mission import plan_rows_schema
from blasthole.schemas.scene import scene_document_schema
from blasthole.services import mission, report, scene
from blasthole.tasks.sweeps import SWEEPS
from blasthole.utils import io
from blasthole.utils.exceptions import handle_errors
from blasthole.utils.logger import logger


@click.group("simulate")
def simulate_group():
    """Synthetic scenes, missions and acceptance sweeps."""


@simulate_group.command("scene")
@click.argument("spec_file")
@seed_option
@out_option("out")
@handle_errors
def scene_command(spec_file, seed, out_dir):
    """Ray-cast the scene described by SPEC_FILE and export the cloud."""
    document = scene_document_schema.load(io.read_json(spec_file))
    spec, pose = document["scene"], document["pose"]
    seed = spec.seed if seed is None else seed

    result = scene.scan(scene.generate(spec), pose, document["pattern"], seed=seed)
    io.write_cloud_csv(os.path.join(out_dir, "cloud.csv"), result.cloud)
    io.write_cloud_binary(os.path.join(out_dir, "cloud.bin"), result.cloud)
    io.write_json(
        os.path.join(out_dir, "truth.json"),
        {
            "hole_centre": [float(v) for v in result.hole_centre],
            "hole_radius": spec.hole_radius,
            "points": len(result.cloud),
            "seed": seed,
        },
    )
    click.echo(f"{len(result.cloud)} points written to {out_dir}")


@simulate_group.command("mission")
@click.argument("plan_file")
@config_option
@seed_option
@out_option("out")
@click.option("--gps-offset", type=float, default=1.0, show_default=True, help="True hole distance from plan.")
@click.option(
    "--perception",
    type=click.Choice(["geometric", "pipeline"]),
    default="geometric",
    show_default=True,
    help="Fast geometric sightings or the full ray-cast detection pipeline.",
)
@handle_errors
def mission_command(plan_file, config_path, seed, out_dir, gps_offset, perception):
    """Run the mission state machine over the holes in PLAN_FILE."""
    cfg = load_config(config_path, seed)
    plan = plan_rows_schema.load(io.read_rows(plan_file, ("x", "y", "column")))
    if perception == "pipeline":
        sensor = mission.PipelinePerception(cfg, seed=cfg.seed)
    else:
        sensor = mission.GeometricPerception(seed=cfg.seed)

    log = mission.run_mission(plan, cfg.mission, sensor, gps_offset, cfg.seed, cfg.tracking.track_lost_frames)
    document = report.mission_report(log)
    io.write_json(os.path.join(out_dir, "mission.json"), document)
    io.write_json_lines(os.path.join(out_dir, "commands.jsonl"), log.commands)

    summary = document["summary"]
    logger.info(f"Mission log written to {out_dir}")
    click.echo(f"{summary['holes_dipped']}/{summary['holes']} holes dipped in {summary['simulated_time']:.1f} s")


@simulate_group.command("sweep")
@click.option("--kind", type=click.Choice(sorted(SWEEPS)), required=True)
@click.option("--scenes", type=click.IntRange(min=1), default=None, help="Scenes per sweep point.")
@config_option
@seed_option
@out_option("out")
@handle_errors
def sweep_command(kind, scenes, config_path, seed, out_dir):
    """Run a batch acceptance sweep as a celery task."""
    kwargs = {"seed": seed or 0, "config_path": config_path}
    if scenes is not None:
        kwargs["scenes"] = scenes
    result = SWEEPS[kind].apply_async(kwargs=kwargs).get()
    io.write_json(os.path.join(out_dir, f"sweep_{kind}.json"), result)
    click.echo(f"{kind} sweep written to {out_dir}")
