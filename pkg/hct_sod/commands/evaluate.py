"""
eval: score a checkpoint or a directory of saved predictions against a dataset
"""
from pathlib import Path
from typing import Optional

import click

from hct_sod.commands.common import output_dir
from hct_sod.models.config import EvalConfig
from hct_sod.models.settings import get_settings
from hct_sod.services.checkpoint_service import load_checkpoint
from hct_sod.services.data.dataset_store import read_dataset
from hct_sod.services.evaluation.evaluator import evaluate_pairs
from hct_sod.services.evaluation.inference import predict_pairs, saved_pairs
from hct_sod.services.evaluation.report_writer import write_report
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()


@click.command("eval")
@click.option("--data", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True,
              help="Dataset directory with groundtruth")
@click.option("--checkpoint", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Run this model over the dataset")
@click.option("--pred-dir", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None,
              help="Score saved <id>_pred.pgm maps instead of running a model")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Scoring threads [HCT_EVAL_WORKERS]")
@click.option("--thresholds", type=click.IntRange(min=2), default=256, show_default=True)
def command(data: Path, checkpoint: Optional[Path], pred_dir: Optional[Path], out: Optional[Path],
            workers: Optional[int], thresholds: int):
    """Write metrics.jsonl and summary.txt with MAE, maxF, S and Emax"""
    if (checkpoint is None) == (pred_dir is None):
        raise click.UsageError("give exactly one of --checkpoint or --pred-dir")

    samples = read_dataset(data)
    if checkpoint is not None:
        pairs = predict_pairs(load_checkpoint(checkpoint), samples)
    else:
        pairs = saved_pairs(samples, pred_dir)

    workers = workers or get_settings().eval_workers
    summary = evaluate_pairs(pairs, EvalConfig(thresholds=thresholds), workers=workers)
    report_dir = write_report(summary, output_dir(out, "eval"))
    click.echo(
        f"MAE={summary.mae:.6f} maxF={summary.max_f:.6f} S={summary.s_measure:.6f} "
        f"Emax={summary.e_max:.6f} ({summary.images} images, report in {report_dir})"
    )
