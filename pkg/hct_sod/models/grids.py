"""
Tensor-carrying domain types: token grids, pyramids, masks and saliency maps
"""
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from hct_sod.errors import DimensionError
from hct_sod.services.numerics import ops
from hct_sod.services.numerics.tensor import Tensor


@dataclass(frozen=True)
class TokenGrid:
    """h*w tokens of c channels; patch (i, j) sits at row i*w + j"""
    h: int
    w: int
    tokens: Tensor

    def __post_init__(self):
        if self.tokens.ndim != 2 or self.tokens.shape[0] != self.h * self.w:
            raise DimensionError(
                f"TokenGrid {self.h}x{self.w} needs [{self.h * self.w} x c] tokens, got {self.tokens.shape}"
            )

    @property
    def c(self) -> int:
        return self.tokens.shape[1]

    @property
    def n(self) -> int:
        return self.h * self.w

    @property
    def extents(self) -> Tuple[int, int, int]:
        return (self.h, self.w, self.c)

    def lattice(self) -> Tensor:
        """[h x w x c] view for convolution and resampling"""
        return ops.reshape(self.tokens, (self.h, self.w, self.c))

    @classmethod
    def from_lattice(cls, grid: Tensor) -> "TokenGrid":
        h, w, c = grid.shape
        return cls(h=h, w=w, tokens=ops.reshape(grid, (h * w, c)))

    def with_tokens(self, tokens: Tensor) -> "TokenGrid":
        return TokenGrid(h=self.h, w=self.w, tokens=tokens)


@dataclass(frozen=True)
class PyramidBundle:
    """Three encoder levels of one modality at strides 4, 8, 16"""
    level1: TokenGrid
    level2: TokenGrid
    level3: TokenGrid

    def __post_init__(self):
        for fine, coarse in ((self.level1, self.level2), (self.level2, self.level3)):
            if fine.h != 2 * coarse.h or fine.w != 2 * coarse.w:
                raise DimensionError(
                    f"pyramid extents must halve between levels, got {fine.h}x{fine.w} -> {coarse.h}x{coarse.w}"
                )
        if self.level1.c != self.level2.c:
            raise DimensionError(f"levels 1 and 2 must share c_s, got {self.level1.c} and {self.level2.c}")

    @property
    def levels(self) -> Tuple[TokenGrid, TokenGrid, TokenGrid]:
        return (self.level1, self.level2, self.level3)

    def replace_level3(self, level3: TokenGrid) -> "PyramidBundle":
        return PyramidBundle(self.level1, self.level2, level3)


@dataclass(frozen=True)
class FusedPyramid:
    """Deep-guided pyramid handed to the decoder, plus its channel bookkeeping"""
    f3: TokenGrid
    f2: TokenGrid
    f1: TokenGrid
    # (deep_part, native_part) concatenated at level 2, level 1 and the final stage
    ratios: Tuple[Tuple[int, int], Tuple[int, int], Tuple[int, int]]

    @property
    def levels(self) -> Tuple[TokenGrid, TokenGrid, TokenGrid]:
        return (self.f1, self.f2, self.f3)


@dataclass(frozen=True)
class AttentionMask:
    """Additive [n x n] mask, 0 for adjacent patches and mask_value for remote ones"""
    h: int
    w: int
    radius: int
    entries: Tensor

    @property
    def n(self) -> int:
        return self.h * self.w

    def allowed(self) -> np.ndarray:
        """Boolean [n x n] adjacency"""
        return self.entries.data == 0.0


class SaliencyKind(str, Enum):
    """Whether a map holds logits or probabilities"""
    LOGIT = "logit"
    PROBABILITY = "probability"


@dataclass(frozen=True)
class SaliencyMap:
    """[h x w] saliency values of one kind"""
    values: Tensor
    kind: SaliencyKind

    def __post_init__(self):
        if self.values.ndim != 2:
            raise DimensionError(f"SaliencyMap expects [h x w], got {self.values.shape}")
        if self.kind == SaliencyKind.PROBABILITY:
            data = self.values.data
            # one ulp of slack for interpolated probabilities
            if data.min() < -1e-12 or data.max() > 1.0 + 1e-12:
                raise ValueError("probability saliency map must lie in [0, 1]")

    @property
    def h(self) -> int:
        return self.values.shape[0]

    @property
    def w(self) -> int:
        return self.values.shape[1]

    def to_probability(self) -> "SaliencyMap":
        if self.kind == SaliencyKind.PROBABILITY:
            return self
        return SaliencyMap(ops.sigmoid(self.values), SaliencyKind.PROBABILITY)

    def resized(self, out_h: int, out_w: int) -> "SaliencyMap":
        """Bilinear resize; convex weights keep probabilities in [0, 1]"""
        grid = ops.reshape(self.values, (self.h, self.w, 1))
        resized = ops.bilinear_resize(grid, out_h, out_w)
        return SaliencyMap(ops.reshape(resized, (out_h, out_w)), self.kind)

    @classmethod
    def constant(cls, h: int, w: int, value: float, kind: SaliencyKind) -> "SaliencyMap":
        return cls(Tensor(np.full((h, w), value)), kind)
