"""
File schemas using Pydantic.
Experiment specs, datasets, pools, states and run reports as they are
written to and read from disk. Indices in files are 1-based.
"""

from enum import Enum
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class KernelFamily(str, Enum):
    """Kernel families the generator knows."""
    EXPONENTIAL = "exponential"
    LORENTZIAN = "lorentzian"
    CUSTOM = "custom"


class MeasureMode(str, Enum):
    """Measure choices on data space."""
    UNIFORM = "uniform"
    INVERSE_VARIANCE = "inverse_variance"


class GaussianComponent(BaseModel):
    """One bump w exp(-(n - center)^2 / (2 width^2))."""
    weight: float = Field(gt=0)
    center: float
    width: float = Field(gt=0)


class TruthSpec(BaseModel):
    """Ground-truth p: a tabulated vector or a Gaussian mixture over n = 1..N."""
    values: Optional[List[float]] = None
    components: List[GaussianComponent] = Field(default_factory=list)
    total: Optional[float] = 1.0


class ExperimentSpec(BaseModel):
    """Everything needed to generate a synthetic dataset deterministically."""

    name: str = "custom"
    kernel_family: KernelFamily
    M: int = Field(ge=1)
    N: int = Field(ge=1)
    noise_fraction: float = Field(ge=0)
    seed: int = Field(ge=0, lt=2 ** 64)
    measure_mode: MeasureMode = MeasureMode.INVERSE_VARIANCE
    truth: TruthSpec = Field(default_factory=TruthSpec)
    kernel_scale: float = 0.01
    kernel_offset: float = 100.0
    custom_kernel: Optional[List[List[float]]] = None

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "name": "example2",
                "kernel_family": "lorentzian",
                "M": 700,
                "N": 450,
                "noise_fraction": 0.1,
                "seed": 1,
                "measure_mode": "uniform",
                "truth": {"components": [{"weight": 1.0, "center": 120, "width": 12}]},
            }
        }
    )

    @model_validator(mode="after")
    def _check_custom_kernel(self):
        if self.kernel_family == KernelFamily.CUSTOM:
            if self.custom_kernel is None:
                raise ValueError("custom kernel family needs custom_kernel")
            if len(self.custom_kernel) != self.M or any(len(r) != self.N for r in self.custom_kernel):
                raise ValueError("custom_kernel must be an M x N nested array")
        if self.truth.values is not None and len(self.truth.values) != self.N:
            raise ValueError("tabulated truth must have N values")
        return self


class KernelGenerator(BaseModel):
    """Analytic kernel description stored in place of the dense matrix."""
    family: KernelFamily
    scale: float = 0.01
    offset: float = 100.0


class DatasetFile(BaseModel):
    """Constraint system on disk."""

    M: int = Field(ge=1)
    N: int = Field(ge=1)
    kernel: Union[KernelGenerator, List[List[float]]]
    f_obs: List[float]
    sigma: Optional[List[float]] = None
    f_true: Optional[List[float]] = None
    p_true: Optional[List[float]] = None
    seed: Optional[int] = None
    measure_mode: Optional[MeasureMode] = None

    @model_validator(mode="after")
    def _check_lengths(self):
        if isinstance(self.kernel, list):
            if len(self.kernel) != self.M or any(len(r) != self.N for r in self.kernel):
                raise ValueError("kernel must be an M x N nested array")
        elif self.kernel.family == KernelFamily.CUSTOM:
            raise ValueError("custom kernels must be stored as nested arrays")
        for name in ("f_obs", "sigma", "f_true"):
            values = getattr(self, name)
            if values is not None and len(values) != self.M:
                raise ValueError(f"{name} must have M={self.M} entries")
        if self.sigma is not None and any(s <= 0 for s in self.sigma):
            raise ValueError("sigma must be strictly positive")
        if self.p_true is not None and len(self.p_true) != self.N:
            raise ValueError(f"p_true must have N={self.N} entries")
        return self


class PoolFile(BaseModel):
    """Preselected constraint pool."""
    indices: List[int]
    ratios: List[float]
    threshold: float
    status: str = "ok"
    biorthogonality: float = 0.0


class StateFile(BaseModel):
    """Selected constraints and multipliers after a fit or prune stage."""
    stage: str
    measure: MeasureMode
    t: float
    epsilon2: float
    selected: List[int]
    lambdas: List[float]


class RunReport(BaseModel):
    """Run report written by every pipeline stage."""

    stage: str
    app_version: str
    dataset: str
    measure: Optional[MeasureMode] = None
    t: Optional[float] = None
    epsilon2: Optional[float] = None
    selected: List[int] = Field(default_factory=list)
    multipliers: List[float] = Field(default_factory=list)
    k: int = 0
    residual2: Optional[float] = None
    stop_reason: Optional[str] = None
    removed: List[int] = Field(default_factory=list)
    entropy: Optional[float] = None
    normalization: Optional[float] = None
    biorthogonality: Optional[float] = None
    pool_size: Optional[int] = None
    prediction_to_truth2: Optional[float] = None
    observation_to_truth2: Optional[float] = None
    elapsed_seconds: Optional[float] = None
