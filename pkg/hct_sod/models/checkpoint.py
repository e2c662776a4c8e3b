"""
Pydantic models for the checkpoint header
"""
from typing import List

from pydantic import BaseModel, Field, field_validator

from hct_sod.models.config import ModelConfig

CHECKPOINT_MAGIC = b"HCT1"
CHECKPOINT_VERSION = 1


class CheckpointEntry(BaseModel):
    """One parameter block: name and shape; values follow the header as little-endian float64"""
    name: str = Field(..., min_length=1)
    shape: List[int] = Field(..., description="Positive extents")

    @field_validator("shape")
    @classmethod
    def positive(cls, v: List[int]) -> List[int]:
        if any(e < 1 for e in v):
            raise ValueError(f"extents must be positive, got {v}")
        return v

    @property
    def count(self) -> int:
        n = 1
        for e in self.shape:
            n *= e
        return n


class CheckpointHeader(BaseModel):
    """JSON header written between the magic/length prefix and the parameter blocks"""
    version: int = Field(default=CHECKPOINT_VERSION)
    config: ModelConfig
    entries: List[CheckpointEntry] = Field(default_factory=list)
