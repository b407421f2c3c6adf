"""Monte Carlo estimators of G(t, x, y) = E(x + y eta_v - K)+ with v = 1 - t.

A pool holds L standard Brownian paths on an n_inner grid of [0, 1]. By Brownian
scaling the same paths give eta_v for every v and sigma, so every estimate drawn
from one pool shares random numbers. For a query the eta row is sorted once and
suffix sums of eta and eta^2 turn the sample mean of any payoff that is affine in
eta on an interval of eta into an O(log L) lookup.
"""
import logging
import math
from functools import lru_cache
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from config import env
from density.engine import DEFAULT_NODES, DensityEngine
from hedging.volatility import modified_volatility
from models.domain import SQRT_8_OVER_PI, CostSchedule, MarketParams, RngSeed
from models.response import GEstimate, OptionCost
from stochastic import rng
from stochastic.paths import Quadrature, eta_from_brownian, make_grid, sample_wiener, sample_wiener_batch

logger = logging.getLogger("asianhedge.pricing")
if not logger.handlers:
    logging.basicConfig(level=logging.INFO)

Estimator = Literal["plain", "parity"]

ROW_CACHE = 8
DY_BUMP = 1e-4
DYY_BUMP = 1e-2


class _SortedRow:
    """Sorted eta samples with suffix sums of eta and eta^2."""

    def __init__(self, eta: np.ndarray):
        self.values = np.sort(eta)
        self.size = self.values.size
        self.c1 = np.concatenate((np.cumsum(self.values[::-1])[::-1], [0.0]))
        self.c2 = np.concatenate((np.cumsum((self.values * self.values)[::-1])[::-1], [0.0]))

    def window(self, lo, hi):
        """Count, sum and sum of squares of eta in (lo, hi]."""
        i_lo = np.searchsorted(self.values, lo, side="right")
        i_hi = np.searchsorted(self.values, hi, side="right")
        i_hi = np.maximum(i_hi, i_lo)
        return i_hi - i_lo, self.c1[i_lo] - self.c1[i_hi], self.c2[i_lo] - self.c2[i_hi]

    def affine(self, lo, hi, alpha, beta):
        """Sum and sum of squares of alpha + beta * eta over eta in (lo, hi]."""
        cnt, s1, s2 = self.window(lo, hi)
        total = alpha * cnt + beta * s1
        squares = alpha * alpha * cnt + 2.0 * alpha * beta * s1 + beta * beta * s2
        return total, squares


def _as_arrays(x, y) -> Tuple[np.ndarray, np.ndarray, bool]:
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    xa, ya = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return np.atleast_1d(xa).copy(), np.atleast_1d(ya).copy(), scalar


class EtaPool:
    """Frozen pool of Brownian paths shared by every estimate of a run."""

    def __init__(self, brownian: np.ndarray, quadrature: Quadrature = "left"):
        if brownian.ndim != 2 or brownian.shape[0] < 2:
            raise ValueError("pool needs at least two Brownian paths")
        self._brownian = brownian
        self._brownian.setflags(write=False)
        self.quadrature = quadrature
        self._row = lru_cache(maxsize=ROW_CACHE)(self._build_row)

    @classmethod
    def sample(
        cls,
        samples: int,
        n_inner: int,
        seed: int,
        quadrature: Quadrature = "left",
        threads: Optional[int] = None,
    ) -> "EtaPool":
        b = sample_wiener_batch(make_grid(n_inner), seed, samples, base_stream=rng.POOL_STREAMS, threads=threads)
        logger.info(f"[EtaPool] L={samples} n_inner={n_inner} quadrature={quadrature}")
        return cls(b, quadrature)

    @property
    def size(self) -> int:
        return self._brownian.shape[0]

    @property
    def n_inner(self) -> int:
        return self._brownian.shape[1] - 1

    def eta(self, v: float, sigma: float) -> np.ndarray:
        return eta_from_brownian(self._brownian, v, sigma, self.quadrature)

    def _build_row(self, v: float, sigma: float) -> _SortedRow:
        return _SortedRow(self.eta(v, sigma))

    def _finish(self, total, squares) -> Tuple[np.ndarray, np.ndarray]:
        n = self.size
        mean = total / n
        var = np.maximum(squares / n - mean * mean, 0.0) * n / (n - 1)
        return mean, np.sqrt(var / n)

    # Array forms used along hedged paths.

    def value_arrays(self, t: float, x, y, strike: float, sigma: float, estimator: Estimator = "plain"):
        x, y, _ = _as_arrays(x, y)
        intrinsic = np.maximum(x - strike, 0.0)
        v = 1.0 - t
        if v <= 0.0:
            return intrinsic, np.zeros_like(x)
        row = self._row(v, sigma)
        live = y > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(live, (strike - x) / np.where(live, y, 1.0), np.inf)
        if estimator == "plain":
            total, squares = row.affine(b, np.inf, x - strike, y)
            mean, se = self._finish(total, squares)
        elif estimator == "parity":
            total, squares = row.affine(-np.inf, b, strike - x, -y)
            put, se = self._finish(total, squares)
            mean = x + y * v - strike + put
        else:
            raise ValueError(f"unknown estimator: {estimator}")
        return np.where(live, mean, intrinsic), np.where(live, se, 0.0)

    def dy_arrays(self, t: float, x, y, strike: float, sigma: float):
        """Forward difference in y on common samples, clamped to [0, 1 - t]."""
        x, y, _ = _as_arrays(x, y)
        if np.any(y <= 0.0):
            raise ValueError("y must be positive")
        v = 1.0 - t
        if v <= 0.0:
            return np.zeros_like(x), np.zeros_like(x)
        row = self._row(v, sigma)
        delta = np.maximum(DY_BUMP, DY_BUMP * y)
        b0 = (strike - x) / y
        b1 = (strike - x) / (y + delta)
        top, top_sq = row.affine(b0, np.inf, 0.0, 1.0)
        win, win_sq = row.affine(b1, b0, (x - strike) / delta, (y + delta) / delta)
        mean, se = self._finish(top + win, top_sq + win_sq)
        saturated = x >= strike
        mean = np.where(saturated, v, np.clip(mean, 0.0, v))
        return mean, np.where(saturated, 0.0, se)

    def dyy_arrays(self, t: float, x, y, strike: float, sigma: float):
        """Central second difference in y with bump 1e-2 * y on common samples."""
        x, y, _ = _as_arrays(x, y)
        if np.any(y <= 0.0):
            raise ValueError("y must be positive")
        v = 1.0 - t
        if v <= 0.0:
            return np.zeros_like(x), np.zeros_like(x)
        row = self._row(v, sigma)
        h = DYY_BUMP * y
        h2 = h * h
        b_up = (strike - x) / (y + h)
        b_mid = (strike - x) / y
        b_dn = (strike - x) / (y - h)
        # Only the y+h payoff is live on (b_up, b_mid]; the y+h and y payoffs on (b_mid, b_dn].
        w1, w1_sq = row.affine(b_up, b_mid, (x - strike) / h2, (y + h) / h2)
        w2, w2_sq = row.affine(b_mid, b_dn, (strike - x) / h2, -(y - h) / h2)
        mean, se = self._finish(w1 + w2, w1_sq + w2_sq)
        saturated = x >= strike
        return np.where(saturated, 0.0, mean), np.where(saturated, 0.0, se)

    # Scalar forms.

    def value(self, t: float, x: float, y: float, strike: float, sigma: float,
              estimator: Estimator = "plain") -> GEstimate:
        mean, se = self.value_arrays(t, x, y, strike, sigma, estimator)
        return self._estimate(mean, se, t, x, y, strike, sigma)

    def dy(self, t: float, x: float, y: float, strike: float, sigma: float) -> GEstimate:
        mean, se = self.dy_arrays(t, x, y, strike, sigma)
        return self._estimate(mean, se, t, x, y, strike, sigma)

    def dyy(self, t: float, x: float, y: float, strike: float, sigma: float) -> GEstimate:
        mean, se = self.dyy_arrays(t, x, y, strike, sigma)
        return self._estimate(mean, se, t, x, y, strike, sigma)

    def _estimate(self, mean, se, t, x, y, strike, sigma) -> GEstimate:
        exact = t >= 1.0 or y == 0.0
        return GEstimate(
            value=float(mean[0]), se=float(se[0]), L=0 if exact else self.size,
            t=t, x=x, y=y, sigma=sigma, strike=strike,
        )

    def pde_residual(self, t: float, x: float, y: float, strike: float, sigma: float) -> Tuple[float, float]:
        """G_t + y G_x + (sigma^2/2) y^2 G_yy by per-sample differences on this pool."""
        if not 0.0 <= t < 1.0 or y <= 0.0:
            raise ValueError("need 0 <= t < 1 and y > 0")
        v = 1.0 - t
        h_t = 0.01 * v
        h_x = max(1e-2, 1e-3 * max(x, strike))
        h_y = DYY_BUMP * y

        def payoff(vv, xx, yy):
            return np.maximum(xx + yy * self.eta(vv, sigma) - strike, 0.0)

        base = payoff(v, x, y)
        if t >= h_t:
            g_t = (payoff(v - h_t, x, y) - payoff(v + h_t, x, y)) / (2.0 * h_t)
        else:
            g_t = (payoff(v - h_t, x, y) - base) / h_t
        g_x = (payoff(v, x + h_x, y) - payoff(v, x - h_x, y)) / (2.0 * h_x)
        g_yy = (payoff(v, x, y + h_y) - 2.0 * base + payoff(v, x, y - h_y)) / (h_y * h_y)
        residual = g_t + y * g_x + 0.5 * sigma * sigma * y * y * g_yy
        return float(residual.mean()), float(residual.std(ddof=1) / math.sqrt(residual.size))


def saturated_partials(t: float, x: float, y: float, strike: float) -> Tuple[float, float, float, float]:
    """G and (G_t, G_x, G_yy) where x >= K and G = x + y(1 - t) - K."""
    if x < strike:
        raise ValueError("closed form holds only for x >= K")
    return x + y * (1.0 - t) - strike, -y, 1.0, 0.0


def eta_sample(t: float, sigma: float, n_inner: int, seed: int) -> float:
    if not 0.0 <= t < 1.0:
        raise ValueError("t must lie in [0, 1)")
    w = sample_wiener(make_grid(n_inner), RngSeed(seed=seed, stream=rng.POOL_STREAMS))
    return float(eta_from_brownian(w.values, 1.0 - t, sigma))


def eta_pool(samples: int, n_inner: int, seed: int, quadrature: Quadrature = "left",
             threads: Optional[int] = None) -> EtaPool:
    return EtaPool.sample(samples, n_inner, seed, quadrature, threads)


def _check_args(t: float, y: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if y < 0.0:
        raise ValueError("y must be >= 0")


def _exact(t, x, y, strike, sigma, value) -> GEstimate:
    return GEstimate(value=value, se=0.0, L=0, t=t, x=x, y=y, sigma=sigma, strike=strike)


def g_value(t: float, x: float, y: float, strike: float, sigma: float, samples: int, n_inner: int,
            seed: int, estimator: Estimator = "plain") -> GEstimate:
    _check_args(t, y)
    if t == 1.0 or y == 0.0:
        return _exact(t, x, y, strike, sigma, max(x - strike, 0.0))
    return eta_pool(samples, n_inner, seed).value(t, x, y, strike, sigma, estimator)


def g_dy(t: float, x: float, y: float, strike: float, sigma: float, samples: int, n_inner: int,
         seed: int) -> GEstimate:
    _check_args(t, y)
    if y <= 0.0:
        raise ValueError("y must be positive")
    if x >= strike:
        return _exact(t, x, y, strike, sigma, 1.0 - t)
    if t == 1.0:
        return _exact(t, x, y, strike, sigma, 0.0)
    return eta_pool(samples, n_inner, seed).dy(t, x, y, strike, sigma)


def g_dyy(t: float, x: float, y: float, strike: float, sigma: float, samples: int, n_inner: int,
          seed: int, method: Literal["density", "difference"] = "density",
          nodes: int = DEFAULT_NODES) -> GEstimate:
    """G_yy = (b^2 / y) q(v, b) with b = (K - x) / y, or a pool second difference."""
    _check_args(t, y)
    if y <= 0.0:
        raise ValueError("y must be positive")
    if x >= strike or t == 1.0:
        return _exact(t, x, y, strike, sigma, 0.0)
    v = 1.0 - t
    if method == "density" and v * nodes > 1.0:
        b = (strike - x) / y
        est = DensityEngine(sigma, nodes=nodes).estimate(v, [b], samples, seed)
        scale = b * b / y
        return GEstimate(value=float(scale * est.q[0]), se=float(scale * est.se[0]), L=est.L,
                         t=t, x=x, y=y, sigma=sigma, strike=strike)
    if method == "density":
        logger.info(f"[Pricing] v={v} is inside the first bridge cell, using the difference route")
    return eta_pool(samples, n_inner, seed).dyy(t, x, y, strike, sigma)


def cost_on_pool(pool: EtaPool, params: MarketParams, sigma: float,
                 estimator: Estimator = "parity") -> OptionCost:
    mean, se = pool.value_arrays(0.0, 0.0, params.s0, params.strike, sigma, estimator)
    return OptionCost(
        c0=max(float(mean[0]), 0.0), se=float(se[0]), sigma=sigma, s0=params.s0, strike=params.strike,
        L=pool.size, n_inner=pool.n_inner, estimator=estimator,
    )


def option_cost(params: MarketParams, samples: int, n_inner: int, seed: int,
                estimator: Estimator = "parity", quadrature: Quadrature = "left") -> OptionCost:
    return cost_on_pool(eta_pool(samples, n_inner, seed, quadrature), params, params.sigma, estimator)


def modified_option_cost(params: MarketParams, schedule: CostSchedule, samples: int, n_inner: int,
                         seed: int, estimator: Estimator = "parity", quadrature: Quadrature = "left",
                         leland_factor: float = SQRT_8_OVER_PI) -> OptionCost:
    sigma_hat = modified_volatility(params.sigma, schedule, leland_factor).sigma_hat
    return cost_on_pool(eta_pool(samples, n_inner, seed, quadrature), params, sigma_hat, estimator)


def buy_and_hold_curve(params: MarketParams, sigma_hat_list: Sequence[float], samples: int,
                       n_inner: int, seed: int) -> List[OptionCost]:
    """Costs along a volatility ladder on one pool; tends to S0 as the volatility grows."""
    pool = eta_pool(samples, n_inner, seed)
    return [cost_on_pool(pool, params, s) for s in sigma_hat_list]
