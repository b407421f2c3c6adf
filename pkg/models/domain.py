"""Domain models for market inputs, grids, seeds and cost schedules."""
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# E|Z| for a standard normal Z; Leland's factor is 2 * SQRT_2_OVER_PI = sqrt(8/pi).
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
SQRT_8_OVER_PI = math.sqrt(8.0 / math.pi)


class MarketParams(BaseModel):
    """Driftless Black-Scholes market on the unit horizon (r = 0, constant bond)."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"sigma": 0.1, "s0": 100.0, "strike": 100.0}},
    )

    sigma: float = Field(..., gt=0, description="Volatility per unit time")
    s0: float = Field(..., gt=0, description="Initial asset price")
    strike: float = Field(..., ge=0, description="Strike K of the Asian call")

    @classmethod
    def degenerate(cls, s0: float, strike: float, sigma: float = 0.0) -> "MarketParams":
        """Build params without validation so that sigma = 0 can be used as a test oracle."""
        return cls.model_construct(sigma=sigma, s0=s0, strike=strike)

    def with_sigma(self, sigma: float) -> "MarketParams":
        return MarketParams(sigma=sigma, s0=self.s0, strike=self.strike)


class TimeGrid(BaseModel):
    """Uniform grid t_j = j/n on [0, 1]."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="Number of steps")

    @property
    def dt(self) -> float:
        return 1.0 / self.n

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1, dtype=np.float64) / self.n

    def is_refinement_of(self, coarse: "TimeGrid") -> bool:
        return self.n % coarse.n == 0


class RngSeed(BaseModel):
    """A 64-bit seed plus the stream index used to split batches."""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(..., ge=0, lt=2**64, description="Root entropy")
    stream: int = Field(default=0, ge=0, description="Counter-based stream index")

    def spawn(self, stream: int) -> "RngSeed":
        return RngSeed(seed=self.seed, stream=stream)


class CostSchedule(BaseModel):
    """Proportional cost coefficient kappa_n = kappa0 * n**(-alpha)."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"kappa0": 0.05, "alpha": 0.5, "n": 100}},
    )

    kappa0: float = Field(..., ge=0, description="Cost level at n = 1")
    alpha: float = Field(..., ge=0, le=1, description="Decay exponent of the cost")
    n: int = Field(..., ge=1, description="Number of rebalancing dates")

    @property
    def kappa_n(self) -> float:
        return self.kappa0 * self.n ** (-self.alpha)

    def at(self, n: int) -> "CostSchedule":
        return CostSchedule(kappa0=self.kappa0, alpha=self.alpha, n=n)


class ModifiedVol(BaseModel):
    """Leland-adjusted volatility."""

    model_config = ConfigDict(frozen=True)

    sigma: float = Field(..., ge=0)
    sigma_hat: float = Field(..., ge=0)
    leland_factor: float = Field(default=SQRT_8_OVER_PI, gt=0)

    @model_validator(mode="after")
    def check_not_below_sigma(self) -> "ModifiedVol":
        """The adjustment only ever adds variance."""
        if self.sigma_hat < self.sigma:
            raise ValueError("sigma_hat must be >= sigma")
        return self

    @field_validator("sigma_hat")
    @classmethod
    def finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("sigma_hat must be finite")
        return v
