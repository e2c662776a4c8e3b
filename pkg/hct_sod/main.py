"""
Command-line entry point for HCT RGB-D salient object detection
"""
import click

from hct_sod import __version__
from hct_sod.commands import dump_attention, evaluate, gradcheck, oracle, predict, synth, train
from hct_sod.commands.common import EXIT_CHECKPOINT, EXIT_DATASET, EXIT_RUNTIME, EXIT_USAGE
from hct_sod.errors import CheckpointError, ConfigError, DatasetError
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, ConfigError):
        return EXIT_USAGE
    if isinstance(error, CheckpointError):
        return EXIT_CHECKPOINT
    if isinstance(error, DatasetError):
        return EXIT_DATASET
    return EXIT_RUNTIME


class HctGroup(click.Group):
    """Maps uncaught errors of a sub-command to an exit status and one stderr line"""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except Exception as e:
            code = exit_code_for(e)
            logger.error(f"{ctx.invoked_subcommand or 'hct'} failed: {type(e).__name__}: {e}")
            message = " ".join(str(e).split())
            click.echo(f"error: {type(e).__name__}: {message}", err=True)
            ctx.exit(code)


@click.group(cls=HctGroup)
@click.version_option(__version__, prog_name="hct")
def cli():
    """Hierarchical cross-modal transformer for RGB-D salient object detection"""


# Register sub-commands
cli.add_command(train.command)
cli.add_command(evaluate.command)
cli.add_command(predict.command)
cli.add_command(gradcheck.command)
cli.add_command(dump_attention.command)
cli.add_command(synth.command)
cli.add_command(oracle.command)


def main():
    cli(prog_name="hct")


if __name__ == "__main__":
    main()
