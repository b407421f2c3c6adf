"""Exceptions with stable codes; the CLI maps ``exit_code`` straight to the process status."""
from typing import Optional


class AsianHedgeError(Exception):
    """Base class for every failure the CLI knows how to report."""

    code = "ERROR"
    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ConfigError(AsianHedgeError):
    code = "CONFIG_ERROR"
    exit_code = 2


class EstimatorError(AsianHedgeError):
    """A pricing or density estimator could not produce a value."""

    code = "ESTIMATOR_ERROR"
    exit_code = 3

    def __init__(self, message: str, j: Optional[int] = None):
        if j is not None:
            message = f"{message} (rebalance index j={j})"
        super().__init__(message)
        self.j = j


class SampleQualityError(AsianHedgeError):
    """Too many Monte Carlo samples had to be discarded."""

    code = "SAMPLE_QUALITY_ERROR"
    exit_code = 4

    def __init__(self, message: str, discarded: int, total: int):
        super().__init__(f"{message}: {discarded}/{total} samples discarded")
        self.discarded = discarded
        self.total = total


class AcceptanceFailure(AsianHedgeError):
    code = "ACCEPTANCE_FAIL"
    exit_code = 1
