"""Tolerance checks used by acceptance tables and the self-check suite."""
import math

from models.response import CheckResult


def price_tolerance(expected: float, se: float, rel: float = 0.02, se_mult: float = 3.0) -> float:
    """max(rel * |expected|, se_mult * se)."""
    return max(rel * abs(expected), se_mult * se)


def check_close(name: str, observed: float, expected: float, tol: float) -> CheckResult:
    passed = math.isfinite(observed) and abs(observed - expected) <= tol
    return CheckResult(name=name, expected=f"{expected:.6g} +- {tol:.3g}", observed=f"{observed:.6g}",
                       passed=passed)


def check_range(name: str, observed: float, lo: float, hi: float) -> CheckResult:
    passed = math.isfinite(observed) and lo <= observed <= hi
    return CheckResult(name=name, expected=f"[{lo:.6g}, {hi:.6g}]", observed=f"{observed:.6g}",
                       passed=passed)


def check_true(name: str, condition: bool, expected: str, observed: str) -> CheckResult:
    return CheckResult(name=name, expected=expected, observed=observed, passed=bool(condition))


def strictly_increasing(values) -> bool:
    values = list(values)
    return all(b > a for a, b in zip(values, values[1:]))


def strictly_decreasing(values) -> bool:
    values = list(values)
    return all(b < a for a, b in zip(values, values[1:]))
