"""
Dataset directories: <root>/<id>_rgb.ppm, <id>_depth.pgm, <id>_gt.pgm plus index.txt
"""
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
from pydantic import ValidationError

from hct_sod.errors import DatasetError
from hct_sod.models.sample import Sample
from hct_sod.services.data.image_io import read_gray, read_rgb, write_gray, write_rgb
from hct_sod.utilities.file_handler import PathLike, ensure_dir
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

INDEX_FILE = "index.txt"


def sample_paths(root: PathLike, sample_id: str) -> Dict[str, Path]:
    root = Path(root)
    return {
        "rgb": root / f"{sample_id}_rgb.ppm",
        "depth": root / f"{sample_id}_depth.pgm",
        "gt": root / f"{sample_id}_gt.pgm",
    }


def prediction_path(root: PathLike, sample_id: str) -> Path:
    return Path(root) / f"{sample_id}_pred.pgm"


def write_dataset(samples: Sequence[Sample], root: PathLike) -> Path:
    root = ensure_dir(root)
    for sample in samples:
        paths = sample_paths(root, sample.id)
        write_rgb(paths["rgb"], sample.rgb)
        write_gray(paths["depth"], sample.depth)
        write_gray(paths["gt"], sample.gt)
    (root / INDEX_FILE).write_text("".join(f"{s.id}\n" for s in samples), encoding="utf-8")
    logger.info(f"Wrote {len(samples)} samples to {root}")
    return root


def read_index(root: PathLike) -> List[str]:
    index = Path(root) / INDEX_FILE
    if not index.is_file():
        raise DatasetError(f"no {INDEX_FILE} in {root}")
    ids = [line.strip() for line in index.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not ids:
        raise DatasetError(f"{index} lists no samples")
    if len(set(ids)) != len(ids):
        raise DatasetError(f"{index} lists duplicate ids")
    return ids


def read_sample(root: PathLike, sample_id: str) -> Sample:
    paths = sample_paths(root, sample_id)
    rgb = read_rgb(paths["rgb"])
    depth = read_gray(paths["depth"])[..., None]
    # 8-bit masks may carry anti-aliased edges; binarise at mid-gray
    gt = (read_gray(paths["gt"]) >= 0.5).astype(np.float64)
    try:
        return Sample(id=sample_id, rgb=rgb, depth=depth, gt=gt)
    except ValidationError as e:
        raise DatasetError(f"sample {sample_id!r} is malformed: {e.errors()[0]['msg']}") from e


def read_dataset(root: PathLike) -> List[Sample]:
    samples = [read_sample(root, sample_id) for sample_id in read_index(root)]
    sizes = {s.gt.shape for s in samples}
    if len(sizes) != 1:
        raise DatasetError(f"samples in {root} have differing extents: {sorted(sizes)}")
    logger.info(f"Loaded {len(samples)} samples from {root}")
    return samples


def write_prediction(root: PathLike, sample_id: str, values: np.ndarray) -> Path:
    return write_gray(prediction_path(root, sample_id), values)


def read_prediction(root: PathLike, sample_id: str) -> np.ndarray:
    return read_gray(prediction_path(root, sample_id))
