"""Request/response bodies for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

VariantName = Literal["noma", "anoma_z05", "anoma_z1", "anoma_exact"]


class HealthResponse(BaseModel):
    status: str
    version: str


class RatePairRequest(BaseModel):
    h_strong: float = Field(ge=0)
    h_weak: float = Field(ge=0)
    alpha: float = Field(ge=0, le=1)
    power: float = Field(gt=0)
    tau: float = Field(default=0.0, ge=0, lt=1)


class RatePairResponse(BaseModel):
    rate_strong: float
    rate_weak: float


class AllocationRequest(BaseModel):
    h1: float = Field(ge=0)
    h2: float = Field(ge=0)
    power: float = Field(gt=0)
    tau: float = Field(default=0.0, ge=0, lt=1)
    method: VariantName
    z: Optional[float] = Field(default=None, ge=0, le=1,
                               description="bound parameter; defaults to the "
                                           "method's canonical value")


class AllocationResponse(BaseModel):
    alpha: float
    sic_user: int
    method: str
    maxmin_rate: float


class TheoremCheckRequest(BaseModel):
    h1: float = Field(ge=0)
    h2: float = Field(ge=0)
    power: float = Field(gt=0)
    tau: float = Field(default=0.5, ge=0, lt=1)
    tol: float = Field(default=1e-9, gt=0)


class TheoremCheckResponse(BaseModel):
    alpha_noma: float
    alpha_lower: float
    alpha_exact: float
    alpha_upper: float
    chain_holds: bool


class UniformCodebookRequest(BaseModel):
    rate_param: float = Field(gt=0)
    bits: int = Field(ge=0, le=20)
    log_base: float = Field(default=2.718281828459045, gt=1)


class CodebookResponse(BaseModel):
    levels: list[float]


class QuantizeRequest(BaseModel):
    levels: list[float]
    values: list[float]


class QuantizeResponse(BaseModel):
    indices: list[int]
    quantized: list[float]


class ExpectedRateRequest(BaseModel):
    levels1: list[float]
    levels2: list[float]
    lambda1: float = Field(gt=0)
    lambda2: float = Field(gt=0)
    power: float = Field(gt=0)
    tau: float = Field(default=0.5, ge=0, lt=1)
    variant: VariantName


class ExpectedRateResponse(BaseModel):
    expected_maxmin: float


class FullCsiRequest(BaseModel):
    lambda1: float = Field(gt=0)
    lambda2: float = Field(gt=0)
    power: float = Field(gt=0)
    tau: float = Field(default=0.5, ge=0, lt=1)
    variant: VariantName
    nodes: int = Field(default=512, ge=4, le=4096)
    tail_mass: float = Field(default=1e-10, gt=0, lt=1)
    error_tol: float = Field(default=1e-6, gt=0)


class FullCsiResponse(BaseModel):
    value: float
    error_estimate: float


class MonteCarloRequest(BaseModel):
    levels1: list[float]
    levels2: list[float]
    lambda1: float = Field(gt=0)
    lambda2: float = Field(gt=0)
    power: float = Field(gt=0)
    tau: float = Field(default=0.5, ge=0, lt=1)
    variant: VariantName
    n_samples: int = Field(ge=1)
    seed: int = Field(ge=0)
    block_size: int = Field(default=1 << 17, ge=1)


class MonteCarloResponse(BaseModel):
    estimate: float
    standard_error: float
    outage_count: int
    order_mismatch_count: int
    n_samples: int
    seed: int
    generator: str


class OptimizeRequest(BaseModel):
    levels1: list[float]
    levels2: list[float]
    lambda1: float = Field(gt=0)
    lambda2: float = Field(gt=0)
    power: float = Field(gt=0)
    tau: float = Field(default=0.5, ge=0, lt=1)
    variant: VariantName
    step_size: float = Field(default=0.05, gt=0)
    max_iterations: int = Field(default=500, ge=0)
    gradient_mode: Literal["analytic", "finite_difference"] = "analytic"
    backtracking: bool = True


class OptimizeResponse(BaseModel):
    levels1: list[float]
    levels2: list[float]
    objectives: list[float]
    iterations: int
    monotone: bool


class ExperimentRequest(BaseModel):
    """Flat experiment configuration; omitted fields take their defaults."""

    power: Optional[float] = None
    tau: Optional[float] = None
    lambda1: Optional[float] = None
    lambda2: Optional[float] = None
    bits: Optional[int] = None
    bits_min: Optional[int] = None
    bits_max: Optional[int] = None
    variants: Optional[list[str]] = None
    step_size: Optional[float] = None
    max_iterations: Optional[int] = None
    gradient_mode: Optional[str] = None
    backtracking: Optional[bool] = None
    n_samples: Optional[int] = None
    seed: Optional[int] = None
    theorem_pairs: Optional[int] = None
    theorem_slack: Optional[float] = None
    residual_tol: Optional[float] = None
    quad_nodes: Optional[int] = None
    quad_tol: Optional[float] = None
    output_dir: Optional[str] = None


class SweepRow(BaseModel):
    bits: int
    variant: str
    expected_maxmin: float
    full_csi: float


class SweepResponse(BaseModel):
    rows: list[SweepRow]
    csv_path: str


class OptimizerVariantResult(BaseModel):
    levels1: list[float]
    levels2: list[float]
    objectives: list[float]


class OptimizerExperimentResponse(BaseModel):
    results: dict[str, OptimizerVariantResult]
    csv_path: str


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str


class ValidationResponse(BaseModel):
    passed: bool
    checks: list[CheckModel]
    info: dict
    report_path: str


class DumpResponse(BaseModel):
    paths: list[str]
    levels1: list[float]
    levels2: list[float]
