"""
Options and helpers shared by several sub-commands
"""
from pathlib import Path
from typing import List, Optional, Sequence

import click

from hct_sod.errors import DatasetError
from hct_sod.models.config import ModelConfig
from hct_sod.models.sample import Sample
from hct_sod.models.settings import get_settings
from hct_sod.services.checkpoint_service import load_checkpoint
from hct_sod.services.data.dataset_store import read_dataset
from hct_sod.services.data.synthetic import synth_dataset
from hct_sod.services.network.hct_model import HCTModel

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_GRADCHECK = 3
EXIT_ORACLE = 4
EXIT_CHECKPOINT = 5
EXIT_DATASET = 6

config_option = click.option(
    "--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
    help="Flat key = value config file",
)
set_option = click.option(
    "--set", "overrides", multiple=True, metavar="KEY=VALUE",
    help="Override one config key; may be repeated",
)


def output_dir(out: Optional[Path], command: str) -> Path:
    """--out if given, otherwise <HCT_OUTPUT_DIR>/<command>"""
    return out if out is not None else get_settings().output_dir / command


def load_samples(data: Optional[Path], seed: int, n: int, size: int) -> List[Sample]:
    """Dataset directory if given, otherwise a synthetic set of n samples"""
    if data is None:
        return synth_dataset(seed, n, size)
    samples = read_dataset(data)
    check_sample_size(samples, size)
    return samples


def check_sample_size(samples: Sequence[Sample], size: int) -> None:
    if samples and samples[0].size != size:
        raise DatasetError(f"dataset images are {samples[0].size}px, the model takes {size}px")


def model_from(checkpoint: Optional[Path], cfg: Optional[ModelConfig] = None) -> HCTModel:
    """Checkpointed model, or a freshly initialised one from cfg (toy preset by default)"""
    if checkpoint is not None:
        return load_checkpoint(checkpoint)
    return HCTModel(cfg or ModelConfig.toy())
