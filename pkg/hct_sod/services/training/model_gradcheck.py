"""
Gradient check of the full network: six-term loss on one synthetic sample
"""
from typing import Optional

from hct_sod.models.config import ModelConfig
from hct_sod.models.reports import GradCheckReport
from hct_sod.models.sample import Sample
from hct_sod.services.data.synthetic import synth_sample
from hct_sod.services.network.hct_model import HCTModel
from hct_sod.services.numerics.gradcheck import grad_check
from hct_sod.services.numerics.tensor import Tensor
from hct_sod.services.training.losses import total_loss
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

# float64 round-off of a whole forward pass, divided by 2*eps
MODEL_ABS_FLOOR = 1e-8


def model_grad_check(
    cfg: ModelConfig,
    seed: int = 0,
    max_entries: Optional[int] = 4,
    eps: float = 1e-6,
    tolerance: float = 1e-5,
    abs_floor: float = MODEL_ABS_FLOOR,
    sample: Optional[Sample] = None,
) -> GradCheckReport:
    model = HCTModel(cfg)
    sample = sample or synth_sample(seed, 0, cfg.image_size)

    def loss_fn() -> Tensor:
        out = model.forward(sample.rgb, sample.depth)
        return total_loss(out.pred_r, out.pred_d, out.dcm_preds, sample.gt).total

    report = grad_check(loss_fn, model.store, eps=eps, tolerance=tolerance,
                        max_entries=max_entries, abs_floor=abs_floor, seed=seed)
    logger.info(
        f"Gradient check over {len(report.entries)} tensors: max rel err {report.max_rel_err:.3e}, "
        f"{len(report.failures())} failing"
    )
    return report
