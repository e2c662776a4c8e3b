"""
train: fit a model and write checkpoint.hct, loss_log.tsv and epochs.jsonl
"""
from pathlib import Path
from typing import Optional, Tuple

import click

from hct_sod.commands.common import config_option, load_samples, output_dir, set_option
from hct_sod.services.checkpoint_service import save_checkpoint
from hct_sod.services.network.hct_model import HCTModel
from hct_sod.services.training.trainer import train_loop
from hct_sod.utilities.config_file import dump_config_text, load_configs
from hct_sod.utilities.file_handler import ensure_dir
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

CHECKPOINT_FILE = "checkpoint.hct"
LOSS_LOG_FILE = "loss_log.tsv"
EPOCH_LOG_FILE = "epochs.jsonl"
CONFIG_FILE = "config.txt"


@click.command("train")
@config_option
@set_option
@click.option("--epochs", type=int, default=None, help="Shortcut for --set epochs=N")
@click.option("--n", "n_samples", type=int, default=None, help="Shortcut for --set n_samples=N")
@click.option("--batch", "batch_size", type=int, default=None, help="Shortcut for --set batch_size=N")
@click.option("--seed", type=int, default=None, help="Shortcut for --set seed=N")
@click.option("--data", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None,
              help="Dataset directory; synthetic samples are generated when omitted")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--progress/--no-progress", default=False, help="Show a progress bar")
def command(config_path: Optional[Path], overrides: Tuple[str, ...], epochs: Optional[int],
            n_samples: Optional[int], batch_size: Optional[int], seed: Optional[int],
            data: Optional[Path], out: Optional[Path], progress: bool):
    """Train on a dataset directory or on synthetic pairs"""
    shortcuts = {"epochs": epochs, "n_samples": n_samples, "batch_size": batch_size, "seed": seed}
    overrides = list(overrides) + [f"{k}={v}" for k, v in shortcuts.items() if v is not None]
    model_cfg, train_cfg = load_configs(config_path, overrides)

    samples = load_samples(data, train_cfg.seed, train_cfg.n_samples, model_cfg.image_size)
    out = ensure_dir(output_dir(out, "train"))
    (out / CONFIG_FILE).write_text(dump_config_text(model_cfg, train_cfg), encoding="utf-8")

    model = HCTModel(model_cfg)
    logger.info(f"Training on {len(samples)} samples for {train_cfg.epochs} epochs, output in {out}")
    with open(out / LOSS_LOG_FILE, "w", encoding="utf-8", newline="\n") as loss_log, \
            open(out / EPOCH_LOG_FILE, "w", encoding="utf-8", newline="\n") as epoch_log:
        result = train_loop(model, samples, train_cfg, loss_log=loss_log, epoch_log=epoch_log, progress=progress)
    save_checkpoint(model, out / CHECKPOINT_FILE)

    final = result.history[-1].losses.total
    click.echo(f"trained {len(result.history)} steps, final loss {final:.6f}, checkpoint {out / CHECKPOINT_FILE}")
