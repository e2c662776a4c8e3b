"""
Turns a dataset into (id, prediction, groundtruth) pairs, either by running
a model or by reading saved prediction maps
"""
from pathlib import Path
from typing import List, Sequence

from tqdm import tqdm

from hct_sod.errors import DatasetError
from hct_sod.models.sample import Sample
from hct_sod.services.data.dataset_store import prediction_path, read_prediction, write_prediction
from hct_sod.services.evaluation.evaluator import ScoredPair
from hct_sod.services.network.hct_model import HCTModel
from hct_sod.utilities.file_handler import PathLike, ensure_dir
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()


def _check_size(model: HCTModel, samples: Sequence[Sample]) -> None:
    size = model.cfg.image_size
    for sample in samples:
        if sample.size != size:
            raise DatasetError(f"sample {sample.id} is {sample.size}px, the model takes {size}px")


def predict_pairs(model: HCTModel, samples: Sequence[Sample], progress: bool = False) -> List[ScoredPair]:
    """Model forward passes run one after another; scoring is parallelised later"""
    _check_size(model, samples)
    pairs = []
    for sample in tqdm(samples, desc="predict", unit="img", disable=not progress):
        pairs.append((sample.id, model.predict(sample.rgb, sample.depth), sample.gt))
    return pairs


def write_predictions(pairs: Sequence[ScoredPair], out_dir: PathLike) -> List[Path]:
    out_dir = ensure_dir(out_dir)
    written = [write_prediction(out_dir, sample_id, pred) for sample_id, pred, _ in pairs]
    logger.info(f"Wrote {len(written)} prediction maps to {out_dir}")
    return written


def saved_pairs(samples: Sequence[Sample], pred_dir: PathLike) -> List[ScoredPair]:
    """Pair every sample with <pred_dir>/<id>_pred.pgm"""
    pairs = []
    for sample in samples:
        if not prediction_path(pred_dir, sample.id).is_file():
            raise DatasetError(f"no prediction for {sample.id} in {pred_dir}")
        pred = read_prediction(pred_dir, sample.id)
        if pred.shape != sample.gt.shape:
            raise DatasetError(f"prediction for {sample.id} is {pred.shape}, groundtruth is {sample.gt.shape}")
        pairs.append((sample.id, pred, sample.gt))
    return pairs
