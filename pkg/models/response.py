"""Result models: estimates, hedge outcomes, reports and emitted artifacts."""
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.domain import TimeGrid


class ErrorResponse(BaseModel):
    """Standard error payload written by the CLI on stderr."""

    ok: Literal[False] = False
    error: str = Field(..., description="Error message")
    code: Optional[str] = Field(
        default=None,
        description="Error code for programmatic handling"
    )

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "ok": False,
                "error": "paths must be >= 2",
                "code": "CONFIG_ERROR"
            }
        }
    )


class MomentEstimate(BaseModel):
    """Sample mean with its standard error."""

    value: float
    se: float = Field(..., ge=0)
    samples: int = Field(..., ge=1)


class GEstimate(BaseModel):
    """Estimate of G(t, x, y) or one of its y-derivatives."""

    value: float
    se: float = Field(..., ge=0)
    L: int = Field(..., ge=0, description="Samples used (0 when the value is exact)")
    t: float
    x: float
    y: float
    sigma: float
    strike: float


class OptionCost(BaseModel):
    """Initial cost C0 = G(0, 0, S0) at the given volatility."""

    c0: float = Field(..., ge=0)
    se: float = Field(..., ge=0)
    sigma: float
    s0: float
    strike: float
    L: int
    n_inner: int
    estimator: str = "parity"


class ImplicitRoot(BaseModel):
    """Root a of F(v, a) = z on one bridge with its bracketing certificate."""

    v: float
    z: float
    a: float
    residual: float = Field(..., ge=0)
    bracket_lo: float
    bracket_hi: float


class DensityEstimate(BaseModel):
    """Monte Carlo estimate of q(v, .) on a z grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    v: float = Field(..., gt=0, le=1)
    sigma: float = Field(..., gt=0)
    z_grid: np.ndarray
    q: np.ndarray
    se: np.ndarray
    q_z: Optional[np.ndarray] = None
    q_z_se: Optional[np.ndarray] = None
    q_v: Optional[np.ndarray] = None
    q_v_se: Optional[np.ndarray] = None
    L: int = Field(..., ge=1)
    discarded: int = Field(default=0, ge=0)

    @field_validator("z_grid")
    @classmethod
    def strictly_increasing(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 1 or v.size == 0 or np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise ValueError("z_grid must be positive and strictly increasing")
        return v

    def to_frame(self):
        import pandas as pd

        data = {"v": np.full(self.z_grid.shape, self.v), "z": self.z_grid, "q": self.q, "se": self.se}
        if self.q_z is not None:
            data["q_z"] = self.q_z
        if self.q_v is not None:
            data["q_v"] = self.q_v
        return pd.DataFrame(data)


class BoundFit(BaseModel):
    """Least-squares fit of log q against -(ln(z/v))^2 / (sigma^2 v) on the tail z > v."""

    v: float
    sigma: float
    kappa_hat: float
    intercept: float
    r_squared: float
    points: int
    passed: bool


class HedgeStrategy(BaseModel):
    """Piecewise constant stock holdings gamma_1..gamma_n on the rebalance grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: TimeGrid
    gamma: np.ndarray = Field(..., description="gamma_j held over (t_{j-1}, t_j], j = 1..n")
    sigma_hat: float
    strike: float

    @model_validator(mode="after")
    def check_shape(self) -> "HedgeStrategy":
        if self.gamma.shape != (self.grid.n,):
            raise ValueError("gamma must hold one value per rebalance interval")
        return self


class HedgeOutcome(BaseModel):
    """Terminal accounting of one hedged path."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    v0: float
    v1: float
    payoff: float
    error: float
    total_cost: float = Field(..., ge=0)
    volume: float = Field(..., ge=0, description="Trading volume J_n")
    kappa_n: float = Field(..., ge=0)
    capital: np.ndarray = Field(..., description="Portfolio value V_j at rebalance nodes")
    bond: np.ndarray = Field(..., description="Post-trade bond holdings beta_j = V_j - gamma_{j+1} S_j, beta_n = V_n")


class CompensatorCheck(BaseModel):
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else float("nan")


class Lemma3Statistic(BaseModel):
    lhs: float
    rhs: float


class ErrorDecomposition(BaseModel):
    """Hedging error split into tracking, compensator, cost and residual terms."""

    error: float
    tracking: float
    compensator: float
    cost: float
    residual: float


class ConvergenceRow(BaseModel):
    n: int
    mean_err: float
    se: float
    mean_abs_err: float
    mean_cost: float
    compensator_ratio: float
    rms_err: float
    var_err: float
    failed_paths: int = 0


class ConvergenceReport(BaseModel):
    """Hedging error statistics across rebalance counts."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sigma: float
    kappa0: float
    alpha: float
    paths: int = Field(..., ge=2)
    rows: List[ConvergenceRow]
    per_path: Dict[int, Dict[str, np.ndarray]] = Field(default_factory=dict)

    @field_validator("rows")
    @classmethod
    def sorted_by_n(cls, rows: List[ConvergenceRow]) -> List[ConvergenceRow]:
        ns = [r.n for r in rows]
        if ns != sorted(ns):
            raise ValueError("rows must be sorted by n")
        return rows

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame([r.model_dump(exclude={"failed_paths"}) for r in self.rows])


class Provenance(BaseModel):
    config_hash: str
    seed: int
    timestamp: str
    git_revision: str


class TableArtifact(BaseModel):
    """One emitted table with its provenance block."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    table_id: str
    rows: List[Dict[str, object]]
    provenance: Provenance
    status: Literal["PASS", "FAIL", "ERROR", "INFO", "NON-REPRODUCIBLE"] = "INFO"
    note: Optional[str] = None


class CheckResult(BaseModel):
    """One acceptance or self-check verdict.

    A failed check with ``known_deviation`` set reports NON-REPRODUCIBLE and does not fail
    the run; the note says which published value or bound cannot be met and why.
    """

    name: str
    expected: str
    observed: str
    passed: bool
    known_deviation: Optional[str] = None

    @property
    def status(self) -> str:
        if self.passed:
            return "PASS"
        return "NON-REPRODUCIBLE" if self.known_deviation else "FAIL"

    @property
    def blocking(self) -> bool:
        return self.status == "FAIL"

    @property
    def detail(self) -> str:
        """Observed value, followed by the deviation note when that note applies."""
        if self.status == "NON-REPRODUCIBLE":
            return f"{self.observed} ({self.known_deviation})"
        return self.observed
