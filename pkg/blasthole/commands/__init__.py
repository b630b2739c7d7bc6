from blasthole.commands.detect import detect_command
from blasthole.commands.fit_circle import fit_circle_command
from blasthole.commands.simulate import simulate_group
from blasthole.commands.track import track_command


def register_commands(cli):
    """Registers every subcommand on the root group"""
    cli.add_command(detect_command)
    cli.add_command(track_command)
    cli.add_command(simulate_group)
    cli.add_command(fit_circle_command)
