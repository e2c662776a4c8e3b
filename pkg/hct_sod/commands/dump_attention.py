"""
dump-attn: grayscale attention rows and per-level predictions for one sample
"""
from pathlib import Path
from typing import Optional, Tuple

import click

from hct_sod.commands.common import check_sample_size, model_from, output_dir
from hct_sod.services.data.dataset_store import read_dataset
from hct_sod.services.data.synthetic import synth_sample
from hct_sod.services.visualization.attention_dump import dump_attention


@click.command("dump-attn")
@click.option("--checkpoint", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Trained model; a fresh toy model when omitted")
@click.option("--data", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None)
@click.option("--index", type=click.IntRange(min=0), default=0, show_default=True, help="Sample position")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the synthetic sample")
@click.option("--patch", "patches", type=int, multiple=True, help="Query patch index; may be repeated")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
def command(checkpoint: Optional[Path], data: Optional[Path], index: int, seed: int,
            patches: Tuple[int, ...], out: Optional[Path]):
    model = model_from(checkpoint)
    if data is None:
        sample = synth_sample(seed, index, model.cfg.image_size)
    else:
        samples = read_dataset(data)
        if index >= len(samples):
            raise click.BadParameter(f"dataset has {len(samples)} samples", param_hint="--index")
        sample = samples[index]
        check_sample_size([sample], model.cfg.image_size)
    written = dump_attention(model, sample, output_dir(out, "attention"), patches=patches or None)
    click.echo(f"wrote {len(written)} maps for {sample.id}")
