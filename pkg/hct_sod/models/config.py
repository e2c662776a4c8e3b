"""
Pydantic models for model, training and evaluation configuration
"""
from enum import Enum
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class AttentionMode(str, Enum):
    """Cross-modal attention variant applied at the deepest level"""
    HCA = "hca"
    GSA = "gsa"
    GLOBAL_CROSS = "global_cross"
    NONE = "none"


class FusionMode(str, Enum):
    """Decoder fusion variant"""
    DCM = "dcm"
    CONCAT = "concat"


# Patch strides of the three pyramid levels
LEVEL_STRIDES: Tuple[int, int, int] = (4, 8, 16)


class ModelConfig(BaseModel):
    """Every architectural hyperparameter; snapshotted into checkpoints"""
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    image_size: int = Field(default=64, ge=16, description="Input side length, divisible by 16")
    rgb_channels: int = Field(default=3, ge=1, description="Channels of the colour image")
    depth_channels: int = Field(default=1, description="1 keeps depth single-channel, 3 replicates it")
    c_s: int = Field(default=16, ge=1, description="Channels of pyramid levels 1 and 2")
    c_d: int = Field(default=96, ge=1, description="Channels of pyramid level 3")
    heads: int = Field(default=2, ge=1, description="Attention heads in every attention layer")
    depth: int = Field(default=1, ge=0, description="Transformer blocks per encoder level")
    mlp_ratio: int = Field(default=2, ge=1, description="Hidden width multiplier of the block MLP")
    radius: int = Field(default=1, ge=0, description="Chebyshev radius of the local-aligned mask")
    hca_blocks: int = Field(default=1, ge=1, description="Stacked HCA blocks at level 3")
    attention_mode: AttentionMode = Field(default=AttentionMode.HCA)
    use_fpt: bool = Field(default=True, description="Deep-guided pyramid fusion; off projects levels alone")
    fusion_mode: FusionMode = Field(default=FusionMode.DCM)
    ln_eps: float = Field(default=1e-5, gt=0)
    mask_value: float = Field(default=-100.0, lt=0, description="Additive score for remote patches")
    init_seed: int = Field(default=0, description="Seed of the parameter initialiser")

    @model_validator(mode="after")
    def check_shapes(self):
        if self.image_size % LEVEL_STRIDES[-1] != 0:
            raise ValueError(f"image_size {self.image_size} must be divisible by {LEVEL_STRIDES[-1]}")
        if self.depth_channels not in (1, 3):
            raise ValueError("depth_channels must be 1 or 3")
        for name, channels in (("c_s", self.c_s), ("c_d", self.c_d)):
            if channels % self.heads != 0:
                raise ValueError(f"{name}={channels} is not divisible by heads={self.heads}")
        return self

    @property
    def level_sides(self) -> Tuple[int, int, int]:
        """Lattice side lengths of levels 1, 2 and 3"""
        return tuple(self.image_size // s for s in LEVEL_STRIDES)

    @property
    def level_channels(self) -> Tuple[int, int, int]:
        return (self.c_s, self.c_s, self.c_d)

    @classmethod
    def toy(cls, **overrides) -> "ModelConfig":
        """Desk-scale preset: 64 px input, levels 16x16x16, 8x8x16, 4x4x96"""
        values = dict(image_size=64, c_s=16, c_d=96, heads=2, depth=1)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def full_scale(cls, **overrides) -> "ModelConfig":
        """Published shape contract: 224 px input, levels 56x56x64, 28x28x64, 14x14x384"""
        values = dict(image_size=224, c_s=64, c_d=384, heads=2, depth=1)
        values.update(overrides)
        return cls(**values)


class TrainConfig(BaseModel):
    """Optimisation settings; defaults are the published ones"""
    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(default=8, ge=1)
    epochs: int = Field(default=50, ge=1)
    lr_start: float = Field(default=1e-4, gt=0)
    lr_end: float = Field(default=1e-6, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    seed: int = Field(default=0, description="Seed of the shuffling/augmentation stream")
    flip: bool = Field(default=True, description="Random horizontal flips of rgb/depth/gt")
    n_samples: int = Field(default=8, ge=1, description="Synthetic training pairs when no dataset is given")
    prefetch: int = Field(default=2, ge=1, description="Bound of the batch hand-off queue")

    @model_validator(mode="after")
    def check_schedule(self):
        if self.lr_start < self.lr_end:
            raise ValueError(f"lr_start {self.lr_start} must be >= lr_end {self.lr_end}")
        return self

    @classmethod
    def toy(cls, **overrides) -> "TrainConfig":
        """Short schedule with a larger step size for desk-scale runs"""
        values = dict(batch_size=2, epochs=2, lr_start=3e-3, lr_end=3e-4)
        values.update(overrides)
        return cls(**values)


class EvalConfig(BaseModel):
    """Metric conventions inherited from the saliency literature"""
    model_config = ConfigDict(extra="forbid")

    beta_sq: float = Field(default=0.3, gt=0, description="F-measure beta squared")
    thresholds: int = Field(default=256, ge=2, description="Threshold sweep size, t = k/(thresholds-1)")
    alpha: float = Field(default=0.5, ge=0, le=1, description="S-measure object/region balance")
