import click

from blasthole.commands import register_commands


def create_cli():
    """Factory function to create the command-line application"""

    @click.group()
    @click.version_option("1.0.0", prog_name="blasthole")
    def cli():
        """Blast-hole detection and mission simulation."""

    register_commands(cli)
    return cli
