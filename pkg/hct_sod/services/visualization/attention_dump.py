"""
Grayscale dumps of attention rows, per-level predictions and the final map
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from hct_sod.models.sample import Sample
from hct_sod.services.data.image_io import write_gray
from hct_sod.services.network.attention import AttentionTrace
from hct_sod.services.network.hct_model import HCTModel
from hct_sod.utilities.file_handler import PathLike, ensure_dir
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

ATTENTION_STAGES = ("gsa_r", "gsa_d", "lca_r", "lca_d", "cross_r", "cross_d")


def default_patches(side: int) -> List[int]:
    """Top-left corner, centre and bottom-right corner of a side x side lattice"""
    centre = (side // 2) * side + side // 2
    return sorted({0, centre, side * side - 1})


def _head_mean(maps: Sequence[np.ndarray], heads: int) -> np.ndarray:
    """Average of the last block's heads"""
    last = list(maps[-heads:])
    total = last[0].copy()
    for m in last[1:]:
        total += m
    return total / len(last)


def _upscale(lattice: np.ndarray, factor: int) -> np.ndarray:
    return np.repeat(np.repeat(lattice, factor, axis=0), factor, axis=1)


def attention_rows(trace: AttentionTrace, heads: int, side: int, patch: int) -> Dict[str, np.ndarray]:
    """stage -> [side x side] weights of one query patch, scaled so the row maximum is 1"""
    rows = {}
    for stage in ATTENTION_STAGES:
        if stage not in trace:
            continue
        row = _head_mean(trace[stage], heads)[patch].reshape(side, side)
        peak = row.max()
        rows[stage] = row / peak if peak > 0 else row
    return rows


def dump_attention(
    model: HCTModel,
    sample: Sample,
    out_dir: PathLike,
    patches: Optional[Sequence[int]] = None,
) -> List[Path]:
    out_dir = ensure_dir(out_dir)
    cfg = model.cfg
    side = cfg.level_sides[2]
    factor = cfg.image_size // side
    n = side * side
    patches = list(patches) if patches is not None else default_patches(side)
    for p in patches:
        if not 0 <= p < n:
            raise ValueError(f"query patch {p} outside the {side}x{side} lattice")

    trace: AttentionTrace = {}
    output = model.forward(sample.rgb, sample.depth, trace)
    written: List[Path] = []

    for p in patches:
        for stage, row in attention_rows(trace, cfg.heads, side, p).items():
            written.append(write_gray(out_dir / f"{stage}_patch{p}.pgm", _upscale(row, factor)))

    for i, pred in enumerate(output.dcm_preds, start=1):
        written.append(write_gray(out_dir / f"p{i}.pgm", pred.to_probability().values.data))
    written.append(write_gray(out_dir / "final.pgm", output.final.values.data))

    logger.info(f"Wrote {len(written)} attention/prediction maps for {sample.id} to {out_dir}")
    return written
