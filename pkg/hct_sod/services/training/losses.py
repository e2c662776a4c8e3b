"""
Six-term supervision: two attention heads and four decoder heads, each a
stable BCE against the full-resolution groundtruth
"""
from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from hct_sod.errors import DimensionError
from hct_sod.models.grids import SaliencyKind, SaliencyMap
from hct_sod.models.reports import LossBreakdown
from hct_sod.services.numerics import ops
from hct_sod.services.numerics.tensor import Tensor


@dataclass
class LossTerms:
    """Differentiable components in the order r, d, 1, 2, 3, 4 and their sum"""
    components: List[Tensor]
    total: Tensor

    def breakdown(self) -> LossBreakdown:
        values = [c.item() for c in self.components]
        return LossBreakdown.from_components(values[0], values[1], values[2:])


def _gt_tensor(gt: Union[SaliencyMap, np.ndarray, Tensor]) -> Tensor:
    if isinstance(gt, SaliencyMap):
        if gt.kind != SaliencyKind.PROBABILITY:
            raise ValueError("groundtruth must be a probability map")
        return gt.values
    return gt if isinstance(gt, Tensor) else Tensor(gt)


def total_loss(
    pred_r: SaliencyMap,
    pred_d: SaliencyMap,
    dcm_preds: Sequence[SaliencyMap],
    gt: Union[SaliencyMap, np.ndarray, Tensor],
) -> LossTerms:
    """loss_r + loss_d + loss_1 + ... + loss_4, always summed in that order"""
    if len(dcm_preds) != 4:
        raise ValueError(f"expected 4 decoder predictions, got {len(dcm_preds)}")
    target = _gt_tensor(gt)
    maps = [pred_r, pred_d, *dcm_preds]
    components = []
    for index, saliency in enumerate(maps):
        if saliency.kind != SaliencyKind.LOGIT:
            raise ValueError(f"loss term {index} needs logits, got probabilities")
        if saliency.values.shape != target.shape:
            raise DimensionError(
                f"loss term {index}: prediction {saliency.values.shape} does not match groundtruth {target.shape}"
            )
        components.append(ops.stable_bce(saliency.values, target))

    total = components[0]
    for term in components[1:]:
        total = ops.add(total, term)
    return LossTerms(components=components, total=total)


def mean_breakdown(items: Sequence[LossBreakdown]) -> LossBreakdown:
    """Component-wise mean, accumulated left to right"""
    n = len(items)
    sums = [0.0] * 6
    total = 0.0
    for item in items:
        for i, value in enumerate(item.components()):
            sums[i] += value
        total += item.total
    return LossBreakdown(
        loss_r=sums[0] / n, loss_d=sums[1] / n,
        loss_1=sums[2] / n, loss_2=sums[3] / n, loss_3=sums[4] / n, loss_4=sums[5] / n,
        total=total / n,
    )
