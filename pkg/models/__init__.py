"""Data models for run configuration, domain inputs and results."""
from models.domain import CostSchedule, MarketParams, ModifiedVol, RngSeed, TimeGrid
from models.request import RunConfig
from models.response import (
    CheckResult,
    ConvergenceReport,
    DensityEstimate,
    ErrorResponse,
    GEstimate,
    HedgeOutcome,
    HedgeStrategy,
    OptionCost,
    TableArtifact,
)

__all__ = [
    # Domain
    "MarketParams",
    "TimeGrid",
    "RngSeed",
    "CostSchedule",
    "ModifiedVol",
    # Requests
    "RunConfig",
    # Results
    "ErrorResponse",
    "GEstimate",
    "OptionCost",
    "DensityEstimate",
    "HedgeStrategy",
    "HedgeOutcome",
    "ConvergenceReport",
    "CheckResult",
    "TableArtifact",
]
