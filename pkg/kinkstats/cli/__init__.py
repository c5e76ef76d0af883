import click

from .. import artifact_version, configure_logging


def create_cli(config_class):
    """Builds the `kinkstats` command group around a Config class."""

    @click.group(context_settings={"help_option_names": ["-h", "--help"]})
    @click.version_option(artifact_version(), prog_name="kinkstats")
    @click.pass_context
    def cli(ctx):
        """Full counting statistics of Kibble-Zurek kinks in the transverse-field Ising chain."""
        configure_logging(config_class.LOG_LEVEL)
        ctx.obj = config_class

    # --- COMMANDS ---
    from .commands import COMMANDS
    for command in COMMANDS:
        cli.add_command(command)

    return cli
