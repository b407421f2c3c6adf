"""Leland volatility adjustment."""
import math

from models.domain import SQRT_8_OVER_PI, CostSchedule, ModifiedVol


def modified_volatility(sigma: float, schedule: CostSchedule,
                        leland_factor: float = SQRT_8_OVER_PI) -> ModifiedVol:
    """sigma_hat^2 = sigma^2 + sigma * sqrt(n) * kappa_n * leland_factor."""
    variance = sigma * sigma + sigma * math.sqrt(schedule.n) * schedule.kappa_n * leland_factor
    return ModifiedVol(sigma=sigma, sigma_hat=math.sqrt(variance), leland_factor=leland_factor)
