"""
predict: write <id>_pred.pgm final saliency maps for a dataset
"""
from pathlib import Path
from typing import Optional

import click

from hct_sod.commands.common import output_dir
from hct_sod.services.checkpoint_service import load_checkpoint
from hct_sod.services.data.dataset_store import read_dataset
from hct_sod.services.evaluation.inference import predict_pairs, write_predictions


@click.command("predict")
@click.option("--checkpoint", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--data", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--progress/--no-progress", default=False)
def command(checkpoint: Path, data: Path, out: Optional[Path], progress: bool):
    pairs = predict_pairs(load_checkpoint(checkpoint), read_dataset(data), progress=progress)
    written = write_predictions(pairs, output_dir(out, "predict"))
    click.echo(f"wrote {len(written)} prediction maps")
