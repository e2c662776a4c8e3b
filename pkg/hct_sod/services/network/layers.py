"""
Parameterised building blocks shared by the encoder, pyramid and decoder
"""
import math
from typing import Tuple

import numpy as np

from hct_sod.services.numerics import ops
from hct_sod.services.numerics.params import ParamStore
from hct_sod.services.numerics.tensor import Tensor


class Initializer:
    """Seeded parameter initialiser; construction order fixes the random stream"""

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)

    def uniform(self, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
        bound = 1.0 / math.sqrt(fan_in)
        return self.rng.uniform(-bound, bound, size=shape)

    def normal(self, shape: Tuple[int, ...], std: float = 0.02) -> np.ndarray:
        return self.rng.normal(0.0, std, size=shape)


class Dense:
    """Token-wise linear map [n x cin] -> [n x cout]"""

    def __init__(self, store: ParamStore, name: str, cin: int, cout: int, init: Initializer, bias: bool = True):
        self.weight = store.add(f"{name}.weight", init.uniform((cin, cout), fan_in=cin))
        self.bias = store.add(f"{name}.bias", np.zeros(cout)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class Conv:
    """Same-padded k x k convolution on [h x w x c] lattices"""

    def __init__(self, store: ParamStore, name: str, cin: int, cout: int, k: int, init: Initializer):
        self.weight = store.add(f"{name}.weight", init.uniform((k, k, cin, cout), fan_in=k * k * cin))
        self.bias = store.add(f"{name}.bias", np.zeros(cout))

    def __call__(self, grid: Tensor) -> Tensor:
        return ops.conv2d(grid, self.weight, self.bias)


class Norm:
    """Layer normalisation over the channel axis"""

    def __init__(self, store: ParamStore, name: str, c: int, eps: float):
        self.gamma = store.add(f"{name}.gamma", np.ones(c))
        self.beta = store.add(f"{name}.beta", np.zeros(c))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta, self.eps)


class Projection:
    """1x1 conv, layer norm, GELU: the pyramid's channel-mixing unit"""

    def __init__(self, store: ParamStore, name: str, cin: int, cout: int, init: Initializer, eps: float):
        self.conv = Conv(store, f"{name}.conv", cin, cout, 1, init)
        self.norm = Norm(store, f"{name}.norm", cout, eps)

    def __call__(self, grid: Tensor) -> Tensor:
        return ops.gelu(self.norm(self.conv(grid)))


def upsample_to(grid: Tensor, h: int, w: int) -> Tensor:
    """Bilinear resize of an [h' x w' x c] lattice"""
    return ops.bilinear_resize(grid, h, w)
