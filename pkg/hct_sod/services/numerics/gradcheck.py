"""
Central-difference gradient checker
"""
from typing import Callable, Optional

import numpy as np

from hct_sod.errors import GradCheckError
from hct_sod.models.reports import GradCheckReport, ParamGradCheck
from hct_sod.services.numerics.params import ParamStore
from hct_sod.services.numerics.tensor import Tensor
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

REL_FLOOR = 1e-8


def relative_error(analytic: float, numeric: float) -> float:
    """|a - n| / max(|a|, |n|, 1e-8)"""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: ParamStore,
    eps: float = 1e-6,
    tolerance: float = 1e-6,
    max_entries: Optional[int] = None,
    abs_floor: float = 0.0,
    seed: int = 0,
) -> GradCheckReport:
    """
    Compare analytic gradients of a scalar loss against (L(t+eps) - L(t-eps)) / (2 eps).

    loss_fn must rebuild the graph from the current parameter values on every call.
    With max_entries set, that many scalar entries per parameter are sampled
    (seeded); otherwise every scalar is perturbed. An entry passes when its
    relative error is below `tolerance` or its absolute error is at most
    `abs_floor`.
    """
    first = loss_fn()
    second = loss_fn()
    if first.shape != () and first.size != 1:
        raise GradCheckError(f"loss must be a scalar, got shape {first.shape}")
    if first.item() != second.item():
        raise GradCheckError(
            f"loss is not deterministic: two identical passes gave {first.item()!r} and {second.item()!r}"
        )

    params.zero_grad()
    first.backward()
    analytic = params.grads()
    rng = np.random.default_rng(seed)

    report = GradCheckReport(eps=eps, tolerance=tolerance, abs_floor=abs_floor)
    for name, tensor in params.items():
        flat = tensor.data.reshape(-1)
        grad_flat = analytic[name].reshape(-1)
        if max_entries is None or max_entries >= flat.size:
            indices = np.arange(flat.size)
        else:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))

        worst_rel = 0.0
        worst_abs = 0.0
        entry_ok = True
        for idx in indices:
            original = flat[idx]
            flat[idx] = original + eps
            plus = loss_fn().item()
            flat[idx] = original - eps
            minus = loss_fn().item()
            flat[idx] = original

            numeric = (plus - minus) / (2.0 * eps)
            a = float(grad_flat[idx])
            rel = relative_error(a, numeric)
            err = abs(a - numeric)
            worst_rel = max(worst_rel, rel)
            worst_abs = max(worst_abs, err)
            if rel >= tolerance and err > abs_floor:
                entry_ok = False

        if not entry_ok:
            logger.warning(f"Gradient check failed for {name}: rel {worst_rel:.3e}, abs {worst_abs:.3e}")
        report.entries.append(ParamGradCheck(
            name=name,
            checked=int(len(indices)),
            max_rel_err=worst_rel,
            max_abs_err=worst_abs,
            passed=entry_ok,
        ))
    return report
