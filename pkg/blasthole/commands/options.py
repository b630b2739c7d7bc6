import click

from blasthole.config import load_pipeline_config


def config_option(command):
    return click.option(
        "--config",
        "config_path",
        default=None,
        help="Pipeline config JSON (falls back to BOREHOLE_CONFIG).",
    )(command)


def seed_option(command):
    return click.option("--seed", type=click.IntRange(min=0), default=None, help="Seed for every random draw.")(
        command
    )


def out_option(default):
    return click.option(
        "--out",
        "out_dir",
        default=default,
        show_default=True,
        type=click.Path(file_okay=False),
        help="Output directory.",
    )


def load_config(config_path, seed):
    """Layered config with the CLI seed applied last"""
    overrides = {"seed": seed} if seed is not None else None
    return load_pipeline_config(config_path, overrides)
