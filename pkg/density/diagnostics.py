"""Cross-checks for density estimates: moments, two-route distances and the tail-shape fit."""
import logging
from typing import Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.stats import gaussian_kde, linregress

from models.response import BoundFit, DensityEstimate

logger = logging.getLogger("asianhedge.density")

MIN_TAIL_POINTS = 5


def normalization(estimate: DensityEstimate) -> Tuple[float, float]:
    """(int q dz, int z q dz) over the estimate's grid."""
    z = estimate.z_grid
    return float(trapezoid(estimate.q, z)), float(trapezoid(z * estimate.q, z))


def density_cdf(estimate: DensityEstimate) -> np.ndarray:
    return cumulative_trapezoid(estimate.q, estimate.z_grid, initial=0.0)


def kolmogorov_distance(estimate: DensityEstimate, samples: np.ndarray) -> float:
    """sup over the grid of |CDF_q - ECDF|."""
    ordered = np.sort(np.asarray(samples, dtype=np.float64))
    ecdf = np.searchsorted(ordered, estimate.z_grid, side="right") / ordered.size
    return float(np.max(np.abs(density_cdf(estimate) - ecdf)))


def kde_distance(
    estimate: DensityEstimate, samples: np.ndarray, quantiles: Tuple[float, float] = (0.05, 0.95)
) -> float:
    """sup |q - KDE| / max q over the central quantile range of the samples."""
    lo, hi = np.quantile(samples, quantiles)
    mask = (estimate.z_grid >= lo) & (estimate.z_grid <= hi)
    if not mask.any():
        raise ValueError("z grid does not cover the central quantile range")
    kde = gaussian_kde(samples)
    diff = np.abs(estimate.q[mask] - kde(estimate.z_grid[mask]))
    return float(diff.max() / estimate.q.max())


def bound_diagnostic(v: float, sigma: float, estimate: DensityEstimate, min_r2: float = 0.9) -> BoundFit:
    """Fit log q(v, z) = c + kappa * ( -(ln(z/v))^2 / (sigma^2 v) ) on the tail z > v.

    Points whose estimate is not at least three standard errors above zero are left out.
    """
    z = estimate.z_grid
    mask = (z > v) & (estimate.q > 3.0 * estimate.se) & (estimate.q > 0)
    if int(mask.sum()) < MIN_TAIL_POINTS:
        raise ValueError(f"insufficient tail points for the bound fit ({int(mask.sum())})")
    x = -np.log(z[mask] / v) ** 2 / (sigma * sigma * v)
    y = np.log(estimate.q[mask])
    fit = linregress(x, y)
    r2 = float(fit.rvalue ** 2)
    passed = bool(fit.slope > 0 and r2 >= min_r2)
    logger.info(f"[BoundFit] v={v} sigma={sigma} kappa_hat={fit.slope:.4f} R2={r2:.4f} points={int(mask.sum())}")
    return BoundFit(
        v=v, sigma=sigma, kappa_hat=float(fit.slope), intercept=float(fit.intercept),
        r_squared=r2, points=int(mask.sum()), passed=passed,
    )
