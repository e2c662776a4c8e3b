"""
synth: write a synthetic RGB-D dataset to disk
"""
from pathlib import Path

import click

from hct_sod.services.data.dataset_store import write_dataset
from hct_sod.services.data.synthetic import synth_dataset
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()


@click.command("synth")
@click.argument("out", type=click.Path(file_okay=False, path_type=Path))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n", "n", type=click.IntRange(min=1), default=8, show_default=True, help="Number of samples")
@click.option("--size", type=click.IntRange(min=16), default=64, show_default=True, help="Side length, multiple of 16")
def command(out: Path, seed: int, n: int, size: int):
    """Generate N samples and write them as <id>_{rgb,depth,gt} images plus index.txt"""
    if size % 16:
        raise click.BadParameter(f"{size} is not a multiple of 16", param_hint="--size")
    root = write_dataset(synth_dataset(seed, n, size), out)
    click.echo(f"wrote {n} samples to {root}")
