"""
Pydantic models for reports, estimates and experiment configuration
"""
import math
from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config.tolerances import BELIEF_SUM_TOLERANCE


class Criterion(str, Enum):
    """Cost criterion of a control problem"""
    DISCOUNTED = "discounted"
    AVERAGE = "average"


class DivergenceKind(str, Enum):
    """Distances and divergences between beliefs"""
    TOTAL_VARIATION = "total_variation"
    RELATIVE_ENTROPY = "relative_entropy"
    WEAK_SURROGATE = "weak_surrogate"


class EstimationMethod(str, Enum):
    """How an expectation was computed"""
    ENUMERATE = "enumerate"
    MONTE_CARLO = "monte_carlo"


class TraceForm(str, Enum):
    """Which conditional law a stability trace compares"""
    FILTER = "filter"        # pi_n, conditions on Y_[0,n]
    PREDICTOR = "predictor"  # pi_{n-}, conditions on Y_[0,n-1]


# =====================================================
# MODEL VALIDATION
# =====================================================

class Violation(BaseModel):
    """A single broken model invariant"""
    model_config = ConfigDict(frozen=True)

    field: str = Field(description="Model field the violation belongs to")
    location: Tuple[int, ...] = Field(default=(), description="Indices of the offending row/entry")
    message: str = Field(description="Human-readable description")


class ValidationReport(BaseModel):
    """Outcome of validating a model; empty iff every invariant holds"""
    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> List[str]:
        return [v.message for v in self.violations]


# =====================================================
# ESTIMATES
# =====================================================

class Estimate(BaseModel):
    """An expectation with its standard error (0 for exact evaluation)"""
    model_config = ConfigDict(frozen=True)

    value: float
    std_error: float = Field(default=0.0, ge=0.0)
    samples: int = Field(default=0, ge=0, description="Monte Carlo paths; 0 for exact evaluation")
    method: EstimationMethod = EstimationMethod.ENUMERATE


class CostEstimate(Estimate):
    """Truncated discounted cost with its truncation bound"""
    horizon: int = Field(ge=0)
    truncation_bound: float = Field(ge=0.0, description="beta^H ||c|| / (1-beta): cost not counted")


class AverageCostEstimate(Estimate):
    """Time-averaged cost over a finite horizon with a convergence diagnostic"""
    horizon: int = Field(ge=1)
    half_horizon_value: float = Field(description="Average over the first T/2 steps")
    convergence_gap: float = Field(ge=0.0, description="|average over T - average over T/2|")


class DivergenceValue(BaseModel):
    """A distance or divergence between two beliefs"""
    model_config = ConfigDict(frozen=True)

    kind: DivergenceKind
    value: float = Field(ge=0.0)

    @model_validator(mode="after")
    def check_range(self):
        if self.kind != DivergenceKind.RELATIVE_ENTROPY and not (0.0 <= self.value <= 2.0 + 1e-12):
            raise ValueError(f"{self.kind.value} must lie in [0, 2], got {self.value}")
        if math.isnan(self.value):
            raise ValueError("divergence is NaN")
        return self


# =====================================================
# STABILITY
# =====================================================

class StabilityRow(BaseModel):
    """One time step of a stability trace"""
    n: int = Field(ge=0)
    e_tv: float = Field(ge=0.0, description="E ||pi^mu_n - pi^nu_n||_TV")
    e_tv_se: float = Field(ge=0.0)
    envelope: float = Field(ge=0.0, description="2 alpha^n")
    relative_entropy: float = Field(ge=0.0, description="E D(pi^mu_n || pi^nu_n) in nats")
    pinsker_rhs: float = Field(ge=0.0, description="E sqrt(2 D(pi^mu_n || pi^nu_n))")


class StabilityTrace(BaseModel):
    """Per-step merging statistics of the true and the mis-initialized filter"""
    rows: List[StabilityRow]
    alpha: float
    form: TraceForm = TraceForm.FILTER
    method: EstimationMethod
    samples: int = 0
    seed: Optional[int] = None

    def row(self, n: int) -> StabilityRow:
        return self.rows[n]


class StepRatio(BaseModel):
    """E_{n+1} / E_n against the contraction constant"""
    n: int
    current: float
    following: float
    ratio: Optional[float] = Field(None, description="None when E_n is zero")
    within_alpha: bool


class MartingaleCheck(BaseModel):
    """Both sides of the expected-TV martingale identity for the predictor"""
    n: int
    lhs: float
    rhs: float
    gap: float


# =====================================================
# CONTRACTION AND OBSERVABILITY
# =====================================================

class ContractionReport(BaseModel):
    """Dobrushin coefficients of the kernels and the resulting contraction constant"""
    delta_T_per_action: List[float]
    delta_T_inf: float = Field(ge=0.0, le=1.0)
    delta_Q: float = Field(ge=0.0, le=1.0)
    alpha: float = Field(ge=0.0, le=2.0)
    exponentially_stable: bool

    @model_validator(mode="after")
    def check_consistency(self):
        if any(not (0.0 <= d <= 1.0) for d in self.delta_T_per_action):
            raise ValueError("Dobrushin coefficients must lie in [0, 1]")
        if self.exponentially_stable != (self.alpha < 1.0):
            raise ValueError("exponentially_stable must equal alpha < 1")
        return self


class GApproximation(BaseModel):
    """Best sup-norm approximation of f by Qg"""
    g: Tuple[float, ...]
    residual: float = Field(ge=0.0)
    success: bool
    g_sup_norm: float = Field(ge=0.0)


class ObservabilityReport(BaseModel):
    """One-step observability of the measurement channel"""
    rank_Q: int = Field(ge=0)
    observable: bool
    worst_residual: float = Field(ge=0.0)
    worst_g_sup_norm: float = Field(ge=0.0, description="Largest ||g|| over coordinate indicators")
    singular_values: Tuple[float, ...]


# =====================================================
# ROBUSTNESS
# =====================================================

class PriorIndependentBound(BaseModel):
    """Discounted robustness bound that does not depend on the priors"""
    rho: float
    n_star: Optional[float] = Field(None, description="Continuous maximiser; None when out of domain")
    n_used: int = Field(ge=0)
    f_value: float
    bound: float = Field(ge=0.0)
    clamped: bool = Field(description="True when the bound was clamped to ||c||/(1-beta)")
    method: Literal["closed_form", "search"]


class CostDecomposition(BaseModel):
    """Transient, strategic-measure and filter-approximation parts of the mismatch gap"""
    n: int = Field(ge=0)
    transient: Estimate
    strategic: Estimate
    approximation: Estimate
    total: Estimate


class RobustnessReport(BaseModel):
    """Measured cost of a mis-specified prior together with every applicable bound"""
    criterion: Criterion
    tv_priors: float
    alpha: float
    measured_gap: Estimate
    cost_mismatched: Estimate = Field(description="J(mu, gamma^nu)")
    cost_matched: Estimate = Field(description="J(mu, gamma^mu)")
    continuity_bound: float = Field(ge=0.0, description="Bound for the selected criterion")
    continuity_bound_discounted: float = Field(ge=0.0)
    continuity_bound_average: float = Field(ge=0.0)
    prior_independent: Optional[PriorIndependentBound] = None
    span_estimate: float = Field(ge=0.0, description="Grid lower estimate of ||J*||_sp")
    grid_slack: float = Field(ge=0.0)
    grid_resolution: int
    slack_resolution: int
    truncation_bound: float = Field(default=0.0, ge=0.0)
    decomposition: Optional[CostDecomposition] = Field(None, description="Decomposition at the reported step")
    decomposition_series: List[CostDecomposition] = Field(default_factory=list)
    tolerances: dict = Field(default_factory=dict, description="Tolerance attached to each reported number")

    @property
    def prior_independent_bound(self) -> Optional[float]:
        return self.prior_independent.bound if self.prior_independent else None


# =====================================================
# EXPERIMENT CONFIGURATION
# =====================================================

class PolicyKind(str, Enum):
    SOLVE = "solve"
    UNIFORM_RANDOM = "uniform_random"
    FIXED_ACTION = "fixed_action"


class PolicySource(BaseModel):
    """Where the control policy of an experiment comes from"""
    kind: PolicyKind = PolicyKind.SOLVE
    grid: Optional[int] = Field(None, ge=1, description="Grid resolution for kind=solve")
    seed: int = Field(0, ge=0, description="Seed for kind=uniform_random")
    action: int = Field(0, ge=0, description="Action for kind=fixed_action")


class ExperimentConfig(BaseModel):
    """Everything one CLI experiment needs"""
    model_path: Path
    mu: Tuple[float, ...]
    nu: Tuple[float, ...]
    policy_source: PolicySource = Field(default_factory=PolicySource)
    method: EstimationMethod = EstimationMethod.MONTE_CARLO
    horizon: int = Field(25, ge=0)
    samples: int = Field(100_000, ge=2)
    seed: int = Field(0, ge=0)
    criterion: Criterion = Criterion.DISCOUNTED
    decomposition_steps: int = Field(5, ge=0)
    output_dir: Path = Path("results")

    @field_validator("mu", "nu", mode="before")
    @classmethod
    def parse_belief(cls, v):
        """Accept '0.5,0.5' strings as well as lists"""
        if isinstance(v, str):
            try:
                return tuple(float(p) for p in v.split(",") if p.strip())
            except ValueError as e:
                raise ValueError(f"belief must be comma-separated numbers: {v!r}") from e
        return v

    @field_validator("mu", "nu")
    @classmethod
    def check_belief(cls, v):
        if not v:
            raise ValueError("belief must have at least one entry")
        if any(not math.isfinite(p) or p < 0.0 for p in v):
            raise ValueError("belief entries must be finite and >= 0")
        total = math.fsum(v)
        if not abs(total - 1.0) <= BELIEF_SUM_TOLERANCE:
            raise ValueError(f"belief sums to {total!r}, expected 1")
        return v

    @model_validator(mode="after")
    def check_model_path(self):
        if not self.model_path.is_file():
            raise ValueError(f"model file not found: {self.model_path}")
        if len(self.mu) != len(self.nu):
            raise ValueError("mu and nu must have the same length")
        return self
