"""Batch studies over many hedged paths: convergence tables, cost curves, absolute-increment limits."""
import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from hedging.engine import PricingConfig, accounting, exact_hedge_no_cost, node_greeks
from hedging.volatility import modified_volatility
from models.domain import SQRT_2_OVER_PI, SQRT_8_OVER_PI, CostSchedule, MarketParams, RngSeed
from models.response import ConvergenceReport, ConvergenceRow, MomentEstimate
from pricing.engine import EtaPool, cost_on_pool
from stochastic import rng
from stochastic.errors import AsianHedgeError
from stochastic.paths import gbm_batch, gbm_path, make_grid, sample_wiener, sample_wiener_batch

logger = logging.getLogger("asianhedge.hedging")

# Stream offset between the path batches of successive rebalance counts.
STREAMS_PER_RUN = 1 << 16
TERMINAL_STREAMS = rng.PATH_STREAMS + (1 << 22)
LEMMA3_STREAMS = rng.PATH_STREAMS + (1 << 23)


def _failed_row(n: int, paths: int) -> ConvergenceRow:
    nan = float("nan")
    return ConvergenceRow(n=n, mean_err=nan, se=nan, mean_abs_err=nan, mean_cost=nan,
                          compensator_ratio=nan, rms_err=nan, var_err=nan, failed_paths=paths)


def convergence_study(
    params: MarketParams,
    kappa0: float,
    alpha: float,
    n_list: Sequence[int],
    paths: int,
    seed: int,
    pricing: Optional[PricingConfig] = None,
    pool: Optional[EtaPool] = None,
    refinement: int = 1,
    leland_factor: float = SQRT_8_OVER_PI,
    keep_per_path: bool = False,
    path_nodes: int = 0,
) -> ConvergenceReport:
    """Hedging error statistics of the Leland strategy for each n, on one frozen pool.

    Paths carry at least ``path_nodes`` steps for the running average behind the payoff.
    The hedge trades on the n-grid only. Per-path rows keep the Philox stream and the row
    inside it, which is enough to redraw any single path.
    """
    if paths < 2:
        raise ValueError("paths must be >= 2")
    if list(n_list) != sorted(set(n_list)):
        raise ValueError("n_list must be strictly ascending")
    pricing = pricing or PricingConfig(seed=seed)
    pool = pool or pricing.make_pool()
    strike = params.strike

    rows: List[ConvergenceRow] = []
    per_path: Dict[int, Dict[str, np.ndarray]] = {}
    for i, n in enumerate(n_list):
        schedule = CostSchedule(kappa0=kappa0, alpha=alpha, n=n)
        sigma_hat = modified_volatility(params.sigma, schedule, leland_factor).sigma_hat
        base_stream = rng.PATH_STREAMS + i * STREAMS_PER_RUN
        m = max(refinement, -(-path_nodes // n))
        w = sample_wiener_batch(make_grid(n * m), seed, paths, base_stream=base_stream,
                                threads=pricing.threads)
        s, xi = gbm_batch(params.sigma, params.s0, w, pricing.quadrature)
        s_nodes = s[:, ::m]
        xi_nodes = xi[:, ::m]
        try:
            gamma, gyy = node_greeks(pool, xi_nodes, s_nodes, strike, sigma_hat, True)
            v0 = pool.value(0.0, 0.0, params.s0, strike, sigma_hat, pricing.estimator).value
        except AsianHedgeError as e:
            logger.warning(f"[ConvergenceStudy] n={n} failed: {e.message}")
            rows.append(_failed_row(n, paths))
            continue

        acc = accounting(s_nodes, gamma, schedule.kappa_n, v0)
        payoff = np.maximum(xi[:, -1] - strike, 0.0)
        err = acc["v1"] - payoff
        lhs = acc["total_cost"]
        rhs = 0.5 * (sigma_hat**2 - params.sigma**2) * np.sum(gyy * s_nodes[:, :-1] ** 2, axis=1) / n
        rhs_total = float(rhs.sum())
        ratio = float(lhs.sum()) / rhs_total if rhs_total > 0 else float("nan")

        rows.append(ConvergenceRow(
            n=n,
            mean_err=float(err.mean()),
            se=float(err.std(ddof=1) / math.sqrt(paths)),
            mean_abs_err=float(np.abs(err).mean()),
            mean_cost=float(lhs.mean()),
            compensator_ratio=ratio,
            rms_err=float(math.sqrt(np.mean(err * err))),
            var_err=float(err.var(ddof=1)),
        ))
        if keep_per_path:
            stream, row = rng.row_streams(paths, base_stream)
            per_path[n] = {
                "seed": np.full(paths, seed, dtype=np.uint64), "stream": stream, "row": row,
                "v1": acc["v1"], "f1": payoff, "err": err, "cost": lhs,
            }
        logger.info(
            f"[ConvergenceStudy] n={n} sigma_hat={sigma_hat:.6f} mean_err={rows[-1].mean_err:.4f} "
            f"se={rows[-1].se:.4f} ratio={ratio:.3f}"
        )
    return ConvergenceReport(sigma=params.sigma, kappa0=kappa0, alpha=alpha, paths=paths,
                             rows=rows, per_path=per_path)


def per_path_frame(report: ConvergenceReport) -> pd.DataFrame:
    frames = [pd.DataFrame({"n": n, **cols}) for n, cols in report.per_path.items()]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(
        columns=["n", "seed", "stream", "row", "v1", "f1", "err", "cost"]
    )


def option_cost_vs_n(
    params: MarketParams, kappa0: float, alpha: float, n_list: Sequence[int], pool: EtaPool,
    leland_factor: float = SQRT_8_OVER_PI,
) -> pd.DataFrame:
    """C0 without costs next to the modified C0_hat(n)."""
    c0 = cost_on_pool(pool, params, params.sigma)
    rows = []
    for n in n_list:
        schedule = CostSchedule(kappa0=kappa0, alpha=alpha, n=n)
        sigma_hat = modified_volatility(params.sigma, schedule, leland_factor).sigma_hat
        c_hat = cost_on_pool(pool, params, sigma_hat)
        rows.append({"n": n, "sigma_hat": sigma_hat, "c0": c0.c0, "c0_se": c0.se,
                     "c0_hat": c_hat.c0, "c0_hat_se": c_hat.se})
    return pd.DataFrame(rows)


def terminal_portfolio_table(
    params: MarketParams, n_list: Sequence[int], seed: int, pool: EtaPool
) -> pd.DataFrame:
    """One fresh path per n, hedged without costs: X_1 against f_1."""
    rows = []
    for i, n in enumerate(n_list):
        w = sample_wiener(make_grid(n), RngSeed(seed=seed, stream=TERMINAL_STREAMS + i))
        outcome = exact_hedge_no_cost(gbm_path(params, w), params, n, pool)
        rows.append({"n": n, "x1": outcome.v1, "f1": outcome.payoff, "error": outcome.error})
    return pd.DataFrame(rows)


def lemma3_study(
    params: MarketParams, n: int, paths: int, seed: int, threads: Optional[int] = None
) -> Dict[str, MomentEstimate]:
    """Mean over paths of both sides of the absolute-increment limit with beta = 1."""
    w = sample_wiener_batch(make_grid(n), seed, paths, base_stream=LEMMA3_STREAMS, threads=threads)
    s, _ = gbm_batch(params.sigma, params.s0, w)
    lhs = np.sum(np.abs(np.diff(s, axis=1)), axis=1) / math.sqrt(n)
    rhs = SQRT_2_OVER_PI * params.sigma * np.sum(s[:, :-1], axis=1) / n

    def moment(x: np.ndarray) -> MomentEstimate:
        return MomentEstimate(value=float(x.mean()), se=float(x.std(ddof=1) / math.sqrt(x.size)),
                              samples=int(x.size))

    return {"lhs": moment(lhs), "rhs": moment(rhs)}


def replication_rms(
    params: MarketParams, n_list: Sequence[int], paths: int, seed: int, pool: EtaPool,
    pricing: Optional[PricingConfig] = None,
) -> List[float]:
    """RMS of V_1 - f_1 for the cost-free hedge at each n."""
    report = convergence_study(params, 0.0, 0.5, n_list, paths, seed, pricing=pricing, pool=pool)
    return [row.rms_err for row in report.rows]