"""Run configuration model shared by every CLI subcommand."""
import hashlib
import io
import json
from typing import Dict, List, Literal

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import env

# Fields that never change numeric output and are left out of the config hash.
_UNHASHED = {"threads", "out_dir", "log_level"}


def _split_list(v):
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


def paper_counts() -> Dict[str, int]:
    """Sample counts of the original study; explicit file or flag values win over them."""
    return {"samples": env.PAPER_SAMPLES, "pool_size": env.PAPER_POOL_SIZE, "paths": env.PAPER_PATHS}


class RunConfig(BaseModel):
    """Every knob of a run; round-trips through the KEY=VALUE file format."""

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        json_schema_extra={
            "example": {
                "sigma": 0.1,
                "s0": 100.0,
                "strike": 100.0,
                "kappa0": 0.05,
                "alpha": 0.5,
                "n_list": [20, 50, 100, 200, 500, 1000],
                "seed": 20240101,
            }
        },
    )

    # Market
    sigma: float = Field(default=0.1, gt=0, description="Volatility for hedge and density runs")
    s0: float = Field(default=100.0, gt=0, description="Initial asset price")
    strike: float = Field(default=100.0, ge=0, description="Strike K")
    sigma_list: List[float] = Field(
        default=[0.01, 0.05, 0.1, 0.5, 1.0, 1.5, 2.0],
        description="Volatility ladder for price tables",
    )

    # Costs
    kappa0: float = Field(default=0.05, ge=0, description="Cost level kappa0")
    alpha: float = Field(default=0.5, ge=0, le=1, description="Cost decay exponent")
    n_list: List[int] = Field(
        default=[20, 50, 100, 200, 500, 1000],
        description="Rebalance counts, ascending",
    )

    # Sample counts
    samples: int = Field(default=env.DESK_SAMPLES, ge=1, description="L for prices and densities")
    pool_size: int = Field(default=env.DESK_POOL_SIZE, ge=1, description="Frozen pricing pool for hedges")
    paths: int = Field(default=env.DESK_PATHS, ge=2, description="Hedged paths M")
    n_inner: int = Field(default=100, ge=1, description="Inner quadrature nodes N")
    refinement: int = Field(default=1, ge=1, description="Path nodes per rebalance interval")

    # Density
    v: float = Field(default=1.0, gt=0, le=1, description="Remaining time for density runs")
    density_nodes: int = Field(default=512, ge=2, description="Bridge nodes m")
    z_points: int = Field(default=120, ge=8, description="Points on the density z grid")

    # Run plumbing
    seed: int = Field(default=env.SEED, ge=0, lt=2**64)
    threads: int = Field(default=env.THREADS, ge=1)
    out_dir: str = Field(default=env.OUT_DIR)
    quadrature: Literal["left", "trapezoid"] = "left"
    paper_scale: bool = env.PAPER_SCALE
    dump_paths: bool = False
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = env.LOG_LEVEL
    sabotage_leland: bool = False
    selfcheck_seeds: int = Field(default=1, ge=1, description="Seeds swept by selfcheck")

    @field_validator("sigma_list", "n_list", mode="before")
    @classmethod
    def parse_list(cls, v):
        """Accept comma-separated strings from files and flags."""
        return _split_list(v)

    @field_validator("sigma_list")
    @classmethod
    def positive_sigmas(cls, v: List[float]) -> List[float]:
        if not v or any(s <= 0 for s in v):
            raise ValueError("sigma_list must hold positive volatilities")
        return v

    @field_validator("n_list")
    @classmethod
    def ascending_counts(cls, v: List[int]) -> List[int]:
        if not v or any(n < 1 for n in v):
            raise ValueError("n_list must hold counts >= 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("n_list must be strictly ascending")
        return v

    @field_validator("log_level", mode="before")
    @classmethod
    def upper_level(cls, v):
        return v.upper() if isinstance(v, str) else v

    @model_validator(mode="after")
    def density_grid_resolves_v(self) -> "RunConfig":
        if self.v * self.density_nodes <= 1:
            raise ValueError("v must exceed one bridge cell (1/density_nodes)")
        return self

    def paper_scaled(self) -> "RunConfig":
        """The same run at the counts of the original study."""
        return self.model_copy(update={**paper_counts(), "paper_scale": True})

    def config_hash(self) -> str:
        payload = self.model_dump(mode="json", exclude=_UNHASHED)
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def to_env_text(self) -> str:
        lines = []
        for key, value in self.model_dump(mode="json").items():
            if isinstance(value, list):
                value = ",".join(repr(x) for x in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_env_text(cls, text: str) -> "RunConfig":
        values = {k.lower(): v for k, v in dotenv_values(stream=io.StringIO(text)).items() if v is not None}
        return cls(**values)
