"""
Training loop: seeded shuffling and flips, per-sample backward accumulated
into the batch mean, Adam at a per-epoch learning rate
"""
import json
from dataclasses import dataclass, field
from typing import IO, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from hct_sod.errors import NonFiniteError
from hct_sod.models.config import TrainConfig
from hct_sod.models.reports import EpochRecord, LossBreakdown, StepRecord
from hct_sod.models.sample import Sample
from hct_sod.services.data.augment import hflip
from hct_sod.services.network.hct_model import HCTModel
from hct_sod.services.numerics.params import ParamStore
from hct_sod.services.training.losses import mean_breakdown, total_loss
from hct_sod.services.training.optimizer import AdamState, adam_step
from hct_sod.services.training.prefetch import BatchPrefetcher
from hct_sod.services.training.schedule import lr_schedule
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

LOSS_LOG_HEADER = "step\tlr\tloss_r\tloss_d\tloss_1\tloss_2\tloss_3\tloss_4\ttotal"

# one batch: (sample index, flip) pairs drawn up front so the rng stream never depends on threading
BatchPlan = List[Tuple[int, bool]]


@dataclass
class TrainResult:
    history: List[StepRecord] = field(default_factory=list)
    epochs: List[EpochRecord] = field(default_factory=list)
    store: Optional[ParamStore] = None

    @property
    def lr_history(self) -> List[float]:
        return [record.lr for record in self.history]


def format_loss_line(step: int, lr: float, losses: LossBreakdown) -> str:
    """Tab-separated, 12 significant digits"""
    values = [lr, *losses.components(), losses.total]
    return "\t".join([str(step)] + [f"{v:.12g}" for v in values])


def plan_epoch(rng: np.random.Generator, n: int, cfg: TrainConfig) -> List[BatchPlan]:
    order = rng.permutation(n)
    flips = rng.random(n) < 0.5 if cfg.flip else np.zeros(n, dtype=bool)
    pairs = [(int(i), bool(f)) for i, f in zip(order, flips)]
    return [pairs[start:start + cfg.batch_size] for start in range(0, n, cfg.batch_size)]


def train_loop(
    model: HCTModel,
    dataset: Sequence[Sample],
    cfg: TrainConfig,
    loss_log: Optional[IO[str]] = None,
    epoch_log: Optional[IO[str]] = None,
    progress: bool = False,
) -> TrainResult:
    if not dataset:
        raise ValueError("training needs at least one sample")
    size = model.cfg.image_size
    for sample in dataset:
        if sample.gt.shape != (size, size):
            raise ValueError(f"sample {sample.id} is {sample.gt.shape}, model expects {size}x{size}")

    rng = np.random.default_rng(cfg.seed)
    store = model.store
    state = AdamState.for_store(store)
    result = TrainResult(store=store)
    steps_per_epoch = -(-len(dataset) // cfg.batch_size)

    def build(plan: BatchPlan) -> List[Sample]:
        return [hflip(dataset[i]) if flip else dataset[i] for i, flip in plan]

    if loss_log is not None:
        loss_log.write(LOSS_LOG_HEADER + "\n")

    bar = tqdm(total=cfg.epochs * steps_per_epoch, desc="train", unit="step", disable=not progress)
    step = 0
    try:
        for epoch in range(cfg.epochs):
            lr = lr_schedule(epoch, cfg)
            epoch_losses: List[LossBreakdown] = []
            for batch in BatchPrefetcher(plan_epoch(rng, len(dataset), cfg), build, depth=cfg.prefetch):
                losses = _train_step(model, batch, state, lr, cfg, step)
                result.history.append(StepRecord(step=step, epoch=epoch, lr=lr, losses=losses))
                epoch_losses.append(losses)
                if loss_log is not None:
                    loss_log.write(format_loss_line(step, lr, losses) + "\n")
                bar.update(1)
                bar.set_postfix(loss=f"{losses.total:.4f}")
                step += 1

            record = EpochRecord(epoch=epoch, lr=lr, steps=len(epoch_losses), mean=mean_breakdown(epoch_losses))
            result.epochs.append(record)
            if epoch_log is not None:
                epoch_log.write(json.dumps(record.model_dump()) + "\n")
            logger.info(f"Epoch {epoch + 1}/{cfg.epochs}: lr={lr:.3e} mean total={record.mean.total:.6f}")
    finally:
        bar.close()
    return result


def _train_step(model: HCTModel, batch: Sequence[Sample], state: AdamState, lr: float,
                cfg: TrainConfig, step: int) -> LossBreakdown:
    store = model.store
    store.zero_grad()
    weight = np.array(1.0 / len(batch))
    per_sample: List[LossBreakdown] = []
    try:
        for sample in batch:
            out = model.forward(sample.rgb, sample.depth)
            terms = total_loss(out.pred_r, out.pred_d, out.dcm_preds, sample.gt)
            # d(batch mean)/d(total_k) = 1/B, accumulated sample by sample
            terms.total.backward(weight)
            per_sample.append(terms.breakdown())
    except NonFiniteError as e:
        logger.error(f"Non-finite values at step {step}: {e}")
        raise NonFiniteError(f"step {step}: {e}") from e

    losses = mean_breakdown(per_sample)
    if not np.isfinite(losses.total):
        raise NonFiniteError(f"step {step}: loss is not finite ({losses.total})")
    try:
        adam_step(store, store.grads(), state, lr, cfg)
    except NonFiniteError as e:
        logger.error(f"Optimizer rejected step {step}: {e}")
        raise NonFiniteError(f"step {step}: {e}") from e
    return losses
