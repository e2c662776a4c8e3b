"""
Dataset-level evaluation: images scored concurrently in worker threads,
aggregate means reduced in id order
"""
import asyncio
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hct_sod.models.config import EvalConfig
from hct_sod.models.reports import EvaluationSummary, ImageMetrics, MetricReport
from hct_sod.services.evaluation.metrics import evaluate_pair
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

# (id, prediction, groundtruth)
ScoredPair = Tuple[str, np.ndarray, np.ndarray]


async def _score_all(pairs: Sequence[ScoredPair], cfg: EvalConfig, workers: int) -> List[MetricReport]:
    limit = asyncio.Semaphore(workers)

    async def score(pair: ScoredPair) -> MetricReport:
        sample_id, pred, gt = pair
        async with limit:
            try:
                return await asyncio.to_thread(evaluate_pair, pred, gt, cfg)
            except Exception as e:
                logger.error(f"Scoring {sample_id} failed: {e}")
                raise

    # gather keeps input order regardless of completion order
    return await asyncio.gather(*(score(pair) for pair in pairs))


def evaluate_pairs(pairs: Sequence[ScoredPair], cfg: Optional[EvalConfig] = None, workers: int = 4) -> EvaluationSummary:
    if not pairs:
        raise ValueError("nothing to evaluate")
    cfg = cfg or EvalConfig()
    reports = asyncio.run(_score_all(pairs, cfg, max(1, workers)))

    per_image = [
        ImageMetrics(id=sample_id, mae=r.mae, maxF=r.max_f, S=r.s_measure, Emax=r.e_max)
        for (sample_id, _, _), r in zip(pairs, reports)
    ]
    sums = [0.0, 0.0, 0.0, 0.0]
    for row in per_image:
        sums[0] += row.mae
        sums[1] += row.maxF
        sums[2] += row.S
        sums[3] += row.Emax
    n = len(per_image)
    summary = EvaluationSummary(
        images=n, mae=sums[0] / n, max_f=sums[1] / n, s_measure=sums[2] / n, e_max=sums[3] / n,
        per_image=per_image,
    )
    logger.info(
        f"Evaluated {n} images: MAE={summary.mae:.4f} maxF={summary.max_f:.4f} "
        f"S={summary.s_measure:.4f} Emax={summary.e_max:.4f}"
    )
    return summary
