import json
import os

import click

from blasthole.services.circle_fit import taubin_fit
from blasthole.utils import io
from blasthole.utils.exceptions import handle_errors


@click.command("fit-circle")
@click.argument("points_file")
@click.option("--out", "out_file", default=None, help="Also write the circle to this JSON file.")
@handle_errors
def fit_circle_command(points_file, out_file):
    """Taubin circle fit of the x,y columns of POINTS_FILE."""
    circle = taubin_fit(io.read_points_csv(points_file))
    document = {"a": circle.a, "b": circle.b, "r": circle.r}
    if out_file:
        io.write_json(os.path.abspath(out_file), document)
    click.echo(json.dumps(document, sort_keys=True))
