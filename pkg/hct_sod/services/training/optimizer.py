"""
Bias-corrected Adam over a ParamStore
"""
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from hct_sod.errors import DimensionError, NonFiniteError
from hct_sod.models.config import TrainConfig
from hct_sod.services.numerics.params import ParamStore


@dataclass
class AdamState:
    """Step counter and first/second moment estimates keyed by parameter name"""
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_store(cls, store: ParamStore) -> "AdamState":
        return cls(
            m={name: np.zeros_like(p.data) for name, p in store.items()},
            v={name: np.zeros_like(p.data) for name, p in store.items()},
        )


def adam_step(
    store: ParamStore,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
    cfg: TrainConfig,
) -> AdamState:
    """Update every parameter in place: theta -= (lr / bc1) * m / (sqrt(v / bc2) + eps)"""
    # validate everything before touching a single parameter
    for name, param in store.items():
        g = grads[name]
        if g.shape != param.shape:
            raise DimensionError(f"gradient of {name!r} has shape {g.shape}, parameter {param.shape}")
        if name not in state.m or state.m[name].shape != param.shape:
            raise DimensionError(f"optimizer state does not match parameter {name!r}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for parameter {name!r}")

    state.t += 1
    bc1 = 1.0 - cfg.beta1 ** state.t
    bc2 = 1.0 - cfg.beta2 ** state.t
    step_size = lr / bc1

    for name, param in store.items():
        g = grads[name]
        m, v = state.m[name], state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        denom = np.sqrt(v * (1.0 / bc2)) + cfg.adam_eps
        param.data -= step_size * m / denom
    return state
