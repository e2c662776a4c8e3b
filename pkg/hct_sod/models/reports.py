"""
Pydantic models for losses, metrics, gradient checks and oracle runs
"""
from typing import List

from pydantic import BaseModel, Field, field_validator, model_validator


class LossBreakdown(BaseModel):
    """The six supervised terms and their sum"""
    loss_r: float = Field(..., description="RGB head of the HCA block")
    loss_d: float = Field(..., description="Depth head of the HCA block")
    loss_1: float
    loss_2: float
    loss_3: float
    loss_4: float
    total: float

    @classmethod
    def from_components(cls, loss_r: float, loss_d: float, dcm: List[float]) -> "LossBreakdown":
        """Build with total summed in the fixed order r, d, 1, 2, 3, 4"""
        total = loss_r + loss_d
        for value in dcm:
            total = total + value
        return cls(loss_r=loss_r, loss_d=loss_d, loss_1=dcm[0], loss_2=dcm[1],
                   loss_3=dcm[2], loss_4=dcm[3], total=total)

    def components(self) -> List[float]:
        return [self.loss_r, self.loss_d, self.loss_1, self.loss_2, self.loss_3, self.loss_4]


class StepRecord(BaseModel):
    """One optimizer step of the training history"""
    step: int
    epoch: int
    lr: float
    losses: LossBreakdown


class EpochRecord(BaseModel):
    """Mean losses over one epoch"""
    epoch: int
    lr: float
    steps: int
    mean: LossBreakdown


class MetricReport(BaseModel):
    """Four saliency metrics for one image, with the threshold curves"""
    s_measure: float = Field(..., ge=0.0, le=1.0)
    max_f: float = Field(..., ge=0.0, le=1.0)
    e_max: float = Field(..., ge=0.0, le=1.0)
    mae: float = Field(..., ge=0.0, le=1.0)
    f_curve: List[float] = Field(default_factory=list)
    e_curve: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_curves(self):
        if len(self.f_curve) != len(self.e_curve):
            raise ValueError("F and E curves must have the same number of thresholds")
        return self


class ImageMetrics(BaseModel):
    """One line of the per-image metrics file"""
    id: str
    mae: float
    maxF: float
    S: float
    Emax: float


class EvaluationSummary(BaseModel):
    """Dataset-level means, reduced in id order"""
    images: int
    mae: float
    max_f: float
    s_measure: float
    e_max: float
    per_image: List[ImageMetrics] = Field(default_factory=list)


class ParamGradCheck(BaseModel):
    """Gradient check outcome for one named parameter"""
    name: str
    checked: int = Field(..., description="Scalar entries compared")
    max_rel_err: float
    max_abs_err: float
    passed: bool


class GradCheckReport(BaseModel):
    """Per-parameter comparison of analytic and central-difference gradients"""
    eps: float
    tolerance: float
    abs_floor: float = Field(default=0.0, description="Absolute discrepancy accepted as round-off")
    entries: List[ParamGradCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_rel_err(self) -> float:
        return max((e.max_rel_err for e in self.entries), default=0.0)

    def failures(self) -> List[ParamGradCheck]:
        return [e for e in self.entries if not e.passed]


class OracleResult(BaseModel):
    """One brute-force comparison"""
    name: str
    max_abs_err: float
    tolerance: float
    cases: int = 1

    @field_validator("max_abs_err")
    @classmethod
    def non_negative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("error must be non-negative")
        return v

    @property
    def passed(self) -> bool:
        return self.max_abs_err <= self.tolerance
