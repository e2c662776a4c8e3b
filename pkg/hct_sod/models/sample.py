"""
Pydantic model for one RGB-D training/evaluation sample
"""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Sample(BaseModel):
    """Aligned colour image, depth map and binary saliency mask"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    id: str = Field(..., min_length=1, description="Sample identifier, used in file names")
    rgb: np.ndarray = Field(..., description="[H x W x 3] colour values in [0, 1]")
    depth: np.ndarray = Field(..., description="[H x W x 1] depth values in [0, 1]")
    gt: np.ndarray = Field(..., description="[H x W] binary groundtruth")

    @field_validator("id")
    @classmethod
    def plain_id(cls, v: str) -> str:
        if any(ch in v for ch in "/\\ \t\n"):
            raise ValueError(f"sample id {v!r} must not contain separators or whitespace")
        return v

    @field_validator("rgb", "depth", "gt")
    @classmethod
    def unit_range(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ValueError("sample arrays must be non-empty and finite")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError(f"sample values must lie in [0, 1], got [{v.min()}, {v.max()}]")
        return v

    @model_validator(mode="after")
    def check_layout(self):
        h, w = self.gt.shape if self.gt.ndim == 2 else (None, None)
        if h is None:
            raise ValueError(f"gt must be [H x W], got {self.gt.shape}")
        if self.rgb.shape != (h, w, 3):
            raise ValueError(f"rgb must be [{h} x {w} x 3], got {self.rgb.shape}")
        if self.depth.shape != (h, w, 1):
            raise ValueError(f"depth must be [{h} x {w} x 1], got {self.depth.shape}")
        if not np.all((self.gt == 0.0) | (self.gt == 1.0)):
            raise ValueError("gt must be strictly binary")
        return self

    @property
    def size(self) -> int:
        return self.gt.shape[0]
