"""Discrete Leland hedge of the Asian call: holdings, self-financing accounts and costs.

Holdings gamma_j = G_y(t_{j-1}, xi, S) are held over (t_{j-1}, t_j]. The opening position
is bought out of V_0 without a charge. At t_j the book moves from gamma_j to gamma_{j+1},
and at t_n it is closed to G_y(1, .) = 0, so the trading volume is

    J_n = sum_{j<n} S_{t_j} |gamma_{j+1} - gamma_j| + S_{t_n} |gamma_n|

and the capital follows V_j = V_{j-1} + gamma_j (S_j - S_{j-1}) - kappa_n S_j |gamma_{j+1} - gamma_j|.
"""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from config import env
from hedging.volatility import modified_volatility
from models.domain import SQRT_2_OVER_PI, SQRT_8_OVER_PI, CostSchedule, MarketParams, TimeGrid
from models.response import (
    CompensatorCheck,
    ErrorDecomposition,
    HedgeOutcome,
    HedgeStrategy,
    Lemma3Statistic,
)
from pricing.engine import Estimator, EtaPool
from stochastic.errors import EstimatorError
from stochastic.paths import AssetPath, Quadrature, asian_payoff, make_grid

logger = logging.getLogger("asianhedge.hedging")
if not logger.handlers:
    logging.basicConfig(level=logging.INFO)


class PricingConfig(BaseModel):
    """How the frozen pricing pool of a run is drawn."""

    pool_size: int = Field(default=env.DESK_POOL_SIZE, ge=2)
    n_inner: int = Field(default=100, ge=1)
    seed: int = Field(default=env.SEED, ge=0, lt=2**64)
    quadrature: Quadrature = "left"
    estimator: Estimator = "plain"
    threads: Optional[int] = None

    def make_pool(self) -> EtaPool:
        return EtaPool.sample(self.pool_size, self.n_inner, self.seed, self.quadrature, self.threads)


def refinement_factor(path_grid: TimeGrid, n: int) -> int:
    if n < 1 or path_grid.n % n != 0:
        raise ValueError(f"grid mismatch: path grid n={path_grid.n} does not refine n={n}")
    return path_grid.n // n


def node_greeks(
    pool: EtaPool,
    xi_nodes: np.ndarray,
    s_nodes: np.ndarray,
    strike: float,
    sigma_hat: float,
    with_gamma_derivative: bool = False,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """gamma_j = G_y(t_{j-1}, xi, S) for j = 1..n and optionally G_yy at t_0..t_{n-1}.

    Works on one path (1-D node arrays) or many (rows).
    """
    n = s_nodes.shape[-1] - 1
    gamma = np.empty(s_nodes.shape[:-1] + (n,))
    gyy = np.empty_like(gamma) if with_gamma_derivative else None
    for j in range(1, n + 1):
        t = (j - 1) / n
        x = xi_nodes[..., j - 1]
        y = s_nodes[..., j - 1]
        try:
            g, _ = pool.dy_arrays(t, x, y, strike, sigma_hat)
            if gyy is not None:
                d2, _ = pool.dyy_arrays(t, x, y, strike, sigma_hat)
                gyy[..., j - 1] = d2.reshape(gyy[..., j - 1].shape)
        except ValueError as e:
            raise EstimatorError(f"G_y estimate failed: {e}", j=j) from e
        if not np.all(np.isfinite(g)):
            raise EstimatorError("non-finite G_y estimate", j=j)
        gamma[..., j - 1] = g.reshape(gamma[..., j - 1].shape)
    return gamma, gyy


def accounting(s_nodes: np.ndarray, gamma: np.ndarray, kappa_n: float, v0) -> Dict[str, np.ndarray]:
    """Self-financing accounts at the rebalance nodes for one or many paths."""
    gains = gamma * np.diff(s_nodes, axis=-1)
    after = np.concatenate((gamma[..., 1:], np.zeros(gamma.shape[:-1] + (1,))), axis=-1)
    volume_terms = s_nodes[..., 1:] * np.abs(after - gamma)
    v0 = np.asarray(v0, dtype=np.float64)[..., None]
    capital = np.concatenate(
        (np.broadcast_to(v0, gamma.shape[:-1] + (1,)), v0 + np.cumsum(gains - kappa_n * volume_terms, axis=-1)),
        axis=-1,
    )
    bond = capital.copy()
    bond[..., :-1] -= gamma * s_nodes[..., :-1]
    volume = volume_terms.sum(axis=-1)
    return {
        "capital": capital,
        "bond": bond,
        "gains": gains.sum(axis=-1),
        "volume": volume,
        "total_cost": kappa_n * volume,
        "v1": capital[..., -1],
    }


def build_leland_strategy(
    path: AssetPath, params: MarketParams, sigma_hat: float, n: int, pool: EtaPool
) -> HedgeStrategy:
    m = refinement_factor(path.grid, n)
    gamma, _ = node_greeks(pool, path.xi_values[::m], path.s_values[::m], params.strike, sigma_hat)
    return HedgeStrategy(grid=make_grid(n), gamma=gamma, sigma_hat=sigma_hat, strike=params.strike)


def simulate_hedge(path: AssetPath, strategy: HedgeStrategy, kappa_n: float, v0: float) -> HedgeOutcome:
    m = refinement_factor(path.grid, strategy.grid.n)
    acc = accounting(path.s_values[::m], strategy.gamma, kappa_n, v0)
    payoff = asian_payoff(path, strategy.strike)
    v1 = float(acc["v1"])
    return HedgeOutcome(
        v0=v0, v1=v1, payoff=payoff, error=v1 - payoff,
        total_cost=float(acc["total_cost"]), volume=float(acc["volume"]), kappa_n=kappa_n,
        capital=acc["capital"], bond=acc["bond"],
    )


def leland_hedge(
    path: AssetPath, params: MarketParams, schedule: CostSchedule, pool: EtaPool,
    leland_factor: float = SQRT_8_OVER_PI, estimator: Estimator = "plain",
) -> Tuple[HedgeStrategy, HedgeOutcome]:
    """Strategy under sigma_hat and its outcome with V0 = G_hat(0, 0, S0)."""
    sigma_hat = modified_volatility(params.sigma, schedule, leland_factor).sigma_hat
    strategy = build_leland_strategy(path, params, sigma_hat, schedule.n, pool)
    v0 = pool.value(0.0, 0.0, params.s0, params.strike, sigma_hat, estimator).value
    return strategy, simulate_hedge(path, strategy, schedule.kappa_n, v0)


def exact_hedge_no_cost(
    path: AssetPath, params: MarketParams, n: int, pool: EtaPool, estimator: Estimator = "plain"
) -> HedgeOutcome:
    strategy = build_leland_strategy(path, params, params.sigma, n, pool)
    v0 = pool.value(0.0, 0.0, params.s0, params.strike, params.sigma, estimator).value
    return simulate_hedge(path, strategy, 0.0, v0)


def compensator_check(
    path: AssetPath, params: MarketParams, schedule: CostSchedule, pool: EtaPool,
    leland_factor: float = SQRT_8_OVER_PI,
) -> CompensatorCheck:
    """kappa_n J_n against ((sigma_hat^2 - sigma^2)/2) sum G_yy S^2 dt on one path."""
    sigma_hat = modified_volatility(params.sigma, schedule, leland_factor).sigma_hat
    n = schedule.n
    m = refinement_factor(path.grid, n)
    s_nodes = path.s_values[::m]
    gamma, gyy = node_greeks(pool, path.xi_values[::m], s_nodes, params.strike, sigma_hat, True)
    lhs = float(accounting(s_nodes, gamma, schedule.kappa_n, 0.0)["total_cost"])
    rhs = 0.5 * (sigma_hat**2 - params.sigma**2) * float(np.sum(gyy * s_nodes[:-1] ** 2)) / n
    return CompensatorCheck(lhs=lhs, rhs=rhs)


def lemma3_statistic(path: AssetPath, beta: np.ndarray, n: int) -> Lemma3Statistic:
    """n^{-1/2} sum beta_{j-1} |dS_j| and its limit sqrt(2/pi) sigma sum beta_j S_j dt."""
    m = refinement_factor(path.grid, n)
    s = path.s_values[::m]
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (n + 1,):
        raise ValueError("beta needs one weight per rebalance node")
    lhs = float(np.sum(beta[:-1] * np.abs(np.diff(s)))) / math.sqrt(n)
    rhs = SQRT_2_OVER_PI * path.sigma * float(np.sum(beta[:-1] * s[:-1])) / n
    return Lemma3Statistic(lhs=lhs, rhs=rhs)


def error_decomposition(
    path: AssetPath, params: MarketParams, schedule: CostSchedule, pool: EtaPool,
    leland_factor: float = SQRT_8_OVER_PI, estimator: Estimator = "plain",
) -> ErrorDecomposition:
    """Split V_1 - f_1 into tracking, compensator and cost terms on the path grid.

    What is left over is the discretization of the Ito terms.
    """
    strategy, outcome = leland_hedge(path, params, schedule, pool, leland_factor, estimator)
    sigma_hat = strategy.sigma_hat
    fine_n = path.grid.n
    m = refinement_factor(path.grid, schedule.n)
    g_hat, gyy = node_greeks(pool, path.xi_values, path.s_values, params.strike, sigma_hat, True)
    held = np.repeat(strategy.gamma, m)
    d_s = np.diff(path.s_values)
    tracking = float(np.sum((held - g_hat) * d_s))
    compensator = 0.5 * (sigma_hat**2 - params.sigma**2) * float(np.sum(gyy * path.s_values[:-1] ** 2)) / fine_n
    cost = -outcome.total_cost
    residual = outcome.error - (tracking + compensator + cost)
    return ErrorDecomposition(
        error=outcome.error, tracking=tracking, compensator=compensator, cost=cost, residual=residual
    )


def hedge_trace(
    path: AssetPath, strategy: HedgeStrategy, outcome: HedgeOutcome, pool: EtaPool,
    estimator: Estimator = "plain",
) -> pd.DataFrame:
    """Per rebalance node: prices, post-trade holdings, accounts and the option value."""
    n = strategy.grid.n
    m = refinement_factor(path.grid, n)
    s = path.s_values[::m]
    xi = path.xi_values[::m]
    t = strategy.grid.times
    holding = np.append(strategy.gamma, 0.0)
    option_value = np.array([
        pool.value(float(t[j]), float(xi[j]), float(s[j]), strategy.strike, strategy.sigma_hat, estimator).value
        for j in range(n + 1)
    ])
    return pd.DataFrame({
        "t": t,
        "S": s,
        "xi": xi,
        "gamma": holding,
        "beta": outcome.bond,
        "capital": outcome.capital,
        "option_value": option_value,
        "payoff": np.maximum(xi - strategy.strike, 0.0),
    })
