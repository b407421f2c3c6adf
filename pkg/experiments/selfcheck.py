"""Invariant suite at reduced sample counts; every oracle of the library in one run."""
import logging
import math
from functools import cached_property
from typing import Callable, List, Tuple

import numpy as np
import pandas as pd

from density.diagnostics import normalization
from density.engine import DensityEngine, default_z_grid
from experiments.hedge import leland_factor
from hedging.engine import PricingConfig
from hedging.study import convergence_study, lemma3_study, replication_rms
from models.domain import SQRT_2_OVER_PI, MarketParams
from models.request import RunConfig
from models.response import CheckResult, TableArtifact
from pricing.engine import EtaPool, cost_on_pool, g_value, saturated_partials
from stochastic.errors import AsianHedgeError
from stochastic.paths import abs_increment_moment
from utils.artifacts import make_artifact
from utils.stats import check_close, check_range, check_true, price_tolerance, strictly_decreasing

logger = logging.getLogger("asianhedge.selfcheck")
if not logger.handlers:
    logging.basicConfig(level=logging.INFO)

MOMENT_SAMPLES = 1_000_000
SAMPLES = 100_000
POOL_SIZE = 20_000
DENSITY_SAMPLES = 20_000
PATHS = 200
REPLICATION_PATHS = 500
LEMMA3_N = 10_000
COMPENSATOR_N = 1000
COMPENSATOR_RANGE = (0.8, 1.2)
BUY_AND_HOLD_LADDER = (1.0, 5.0, 20.0, 50.0)
TWO_ROUTE_SIGMA = 0.5
TWO_ROUTE_POINTS = 10
REPLICATION_BOUND = 0.01


class SelfCheckSuite:
    """All checks for one seed. Pools are drawn lazily and shared between checks."""

    def __init__(self, config: RunConfig, seed: int):
        self.config = config
        self.seed = seed
        self.samples = min(config.samples, SAMPLES)
        self.pool_size = min(config.pool_size, POOL_SIZE)
        self.params = MarketParams(sigma=0.1, s0=config.s0, strike=config.s0)

    @cached_property
    def price_pool(self) -> EtaPool:
        return EtaPool.sample(self.samples, self.config.n_inner, self.seed, self.config.quadrature,
                              self.config.threads)

    @cached_property
    def hedge_pool(self) -> EtaPool:
        return self._pricing().make_pool()

    @cached_property
    def bridge_pool(self) -> EtaPool:
        """Pool on the bridge grid so both derivative routes share one discretization."""
        return EtaPool.sample(self.pool_size, self.config.density_nodes, self.seed, "left", self.config.threads)

    @cached_property
    def density_engine(self) -> DensityEngine:
        return DensityEngine(TWO_ROUTE_SIGMA, nodes=self.config.density_nodes, threads=self.config.threads)

    def _pricing(self) -> PricingConfig:
        return PricingConfig(pool_size=self.pool_size, n_inner=self.config.n_inner, seed=self.seed,
                             quadrature=self.config.quadrature, threads=self.config.threads)

    def moment(self) -> List[CheckResult]:
        est = abs_increment_moment(MOMENT_SAMPLES, self.seed, self.config.threads)
        return [check_close("E|Z| = sqrt(2/pi)", est.value, SQRT_2_OVER_PI, 0.005 * SQRT_2_OVER_PI)]

    def boundary(self) -> List[CheckResult]:
        strike = self.config.strike
        exact = True
        for x in (0.0, 0.5 * strike, strike, 1.5 * strike, 2.0 * strike):
            for y in (0.0, 10.0, 100.0, 1000.0):
                est = g_value(1.0, x, y, strike, self.params.sigma, self.samples, self.config.n_inner, self.seed)
                exact = exact and est.value == max(x - strike, 0.0) and est.L == 0
        return [check_true("G(1, x, y) = (x - K)+ on 20 points", exact, "bit-exact", "bit-exact" if exact else "mismatch")]

    def martingale(self) -> List[CheckResult]:
        eta = self.price_pool.eta(1.0, self.config.sigma)
        se = float(eta.std(ddof=1) / math.sqrt(eta.size))
        zero_strike = self.params.model_copy(update={"strike": 0.0})
        c0 = cost_on_pool(self.price_pool, zero_strike, self.config.sigma, estimator="plain")
        return [
            check_close("E eta_1 = 1", float(eta.mean()), 1.0, 3.0 * se),
            check_close("C0(K=0) = S0", c0.c0, self.config.s0, 3.0 * c0.se),
        ]

    def price(self) -> List[CheckResult]:
        atm = MarketParams(sigma=0.1, s0=100.0, strike=100.0)
        cost = cost_on_pool(self.price_pool, atm, 0.1)
        return [check_close("C0 sigma=0.1 K=S0", cost.c0, 2.303, price_tolerance(2.303, cost.se))]

    def saturated_pde(self) -> List[CheckResult]:
        sigma = self.params.sigma
        worst = 0.0
        for t, x, y in ((0.0, 120.0, 100.0), (0.4, 100.0, 80.0), (0.9, 150.0, 10.0)):
            _, g_t, g_x, g_yy = saturated_partials(t, x, y, self.config.strike)
            worst = max(worst, abs(g_t + y * g_x + 0.5 * sigma * sigma * y * y * g_yy))
        return [check_true("PDE on the saturated branch", worst == 0.0, "0", f"{worst:g}")]

    def lemma3(self) -> List[CheckResult]:
        params = MarketParams(sigma=0.1, s0=100.0, strike=100.0)
        res = lemma3_study(params, LEMMA3_N, PATHS, self.seed, self.config.threads)
        target = SQRT_2_OVER_PI * params.sigma * params.s0
        return [check_close("n^-1/2 sum |dS| limit", res["lhs"].value, target, 0.02 * target)]

    def _compensator_ratio(self, factor: float) -> float:
        report = convergence_study(self.params, 0.05, 0.5, [COMPENSATOR_N], PATHS, self.seed,
                                   pricing=self._pricing(), pool=self.hedge_pool, leland_factor=factor)
        return report.rows[0].compensator_ratio

    def compensator(self) -> List[CheckResult]:
        ratio = self._compensator_ratio(leland_factor(self.config))
        return [check_range("compensator ratio n=1000", ratio, *COMPENSATOR_RANGE)]

    def sabotage_sensitivity(self) -> List[CheckResult]:
        ratio = self._compensator_ratio(SQRT_2_OVER_PI)
        lo, hi = COMPENSATOR_RANGE
        return [check_true("halved Leland factor is detected", not lo <= ratio <= hi,
                           f"outside [{lo}, {hi}]", f"{ratio:.4g}")]

    def two_route_points(self) -> List[Tuple[float, float, float]]:
        """Ten (t, x, y) with t in [0, 0.9), y in [50, 150] and b = (K - x)/y in the bulk of eta_v."""
        gen = np.random.default_rng([self.seed, TWO_ROUTE_POINTS])
        strike = self.config.strike
        t = gen.uniform(0.0, 0.9, TWO_ROUTE_POINTS)
        y = gen.uniform(50.0, 150.0, TWO_ROUTE_POINTS)
        level = gen.uniform(0.3, 1.5, TWO_ROUTE_POINTS)
        x = np.maximum(strike - y * (1.0 - t) * level, 0.0)
        return [(float(ti), float(xi), float(yi)) for ti, xi, yi in zip(t, x, y)]

    def two_route_dy(self) -> List[CheckResult]:
        strike = self.config.strike
        worst = 0.0
        agree = True
        for t, x, y in self.two_route_points():
            bump = self.bridge_pool.dy(t, x, y, strike, TWO_ROUTE_SIGMA)
            density = self.density_engine.partial_moment(1.0 - t, (strike - x) / y, DENSITY_SAMPLES, self.seed)
            tol = 3.0 * math.hypot(bump.se, density.se)
            gap = abs(bump.value - density.value)
            agree = agree and gap <= tol
            worst = max(worst, gap / tol if tol > 0 else math.inf)
        return [check_true(f"G_y bump vs density route ({TWO_ROUTE_POINTS} points)", agree,
                           "within 3 combined SE", f"worst gap {worst:.3g} x tolerance")]

    def two_route_dyy(self) -> List[CheckResult]:
        strike = y = 100.0
        b = 1.0
        bump = self.bridge_pool.dyy(0.0, 0.0, y, strike, TWO_ROUTE_SIGMA)
        est = self.density_engine.estimate(1.0, [b], DENSITY_SAMPLES, self.seed)
        scale = b * b / y
        tol = 3.0 * math.hypot(bump.se, scale * float(est.se[0]))
        return [check_close("G_yy difference vs density route", bump.value, scale * float(est.q[0]), tol)]

    def convexity(self) -> List[CheckResult]:
        gen = np.random.default_rng(self.seed)
        strike = self.config.strike
        t = gen.uniform(0.0, 0.9, 20)
        x = gen.uniform(0.0, strike, 20)
        y = gen.uniform(50.0, 150.0, 20)
        ok = True
        for ti, xi, yi in zip(t, x, y):
            est = self.hedge_pool.dyy(float(ti), float(xi), float(yi), strike, self.params.sigma)
            ok = ok and est.value >= -max(3.0 * est.se, 1e-9)
        return [check_true("G_yy >= -3 se at 20 points", ok, "all", "all" if ok else "violation")]

    def density_normalization(self) -> List[CheckResult]:
        z = default_z_grid(1.0, TWO_ROUTE_SIGMA, self.config.z_points)
        est = self.density_engine.estimate(1.0, z, DENSITY_SAMPLES, self.seed)
        mass, mean = normalization(est)
        return [
            check_range("int q dz", mass, 0.99, 1.01),
            check_range("int z q dz", mean, 0.99, 1.01),
        ]

    def replication_decay(self) -> List[CheckResult]:
        paths = min(self.config.paths, REPLICATION_PATHS)
        rms = replication_rms(self.params, [10, 100, 1000], paths, self.seed, self.hedge_pool, self._pricing())
        c0 = cost_on_pool(self.hedge_pool, self.params, self.params.sigma).c0
        share = rms[-1] / c0
        bound = check_true(
            "no-cost RMS error n=1000 within 1% of C0", share <= REPLICATION_BOUND,
            f"<= {REPLICATION_BOUND:.0%} of C0", f"{share:.2%} of C0",
        ).model_copy(update={"known_deviation": (
            "rebalancing error falls as n^-1/2 and is about 3-4% of C0 at n = 1000 for any pool size"
        )})
        return [
            check_true("no-cost RMS error decreasing in n", strictly_decreasing(rms), "strict decrease",
                       ", ".join(f"{r:.4g}" for r in rms)),
            bound,
        ]

    def buy_and_hold(self) -> List[CheckResult]:
        params = MarketParams(sigma=1.0, s0=self.config.s0, strike=self.config.strike)
        costs = [cost_on_pool(self.price_pool, params, s).c0 for s in BUY_AND_HOLD_LADDER]
        monotone = all(b >= a for a, b in zip(costs, costs[1:]))
        return [
            check_true("C0_hat nondecreasing in sigma_hat", monotone, "nondecreasing",
                       ", ".join(f"{c:.4g}" for c in costs)),
            check_range("C0_hat at sigma_hat=50", costs[-1], 0.95 * self.config.s0, math.inf),
        ]

    def checks(self) -> List[Tuple[str, Callable[[], List[CheckResult]]]]:
        return [
            ("moment", self.moment),
            ("boundary", self.boundary),
            ("martingale", self.martingale),
            ("price", self.price),
            ("saturated_pde", self.saturated_pde),
            ("lemma3", self.lemma3),
            ("compensator", self.compensator),
            ("sabotage_sensitivity", self.sabotage_sensitivity),
            ("two_route_dy", self.two_route_dy),
            ("two_route_dyy", self.two_route_dyy),
            ("convexity", self.convexity),
            ("density_normalization", self.density_normalization),
            ("replication_decay", self.replication_decay),
            ("buy_and_hold", self.buy_and_hold),
        ]

    def run(self) -> List[CheckResult]:
        results: List[CheckResult] = []
        for name, check in self.checks():
            start = len(results)
            try:
                results.extend(check())
            except (AsianHedgeError, ValueError) as e:
                logger.warning(f"[SelfCheck] {name} raised: {e}")
                results.append(CheckResult(name=name, expected="no error", observed=f"{type(e).__name__}: {e}",
                                           passed=False))
            for r in results[start:]:
                logger.info(f"[SelfCheck] seed={self.seed} {r.name}: {r.status} ({r.observed})")
        return results


def run_selfcheck(config: RunConfig) -> Tuple[TableArtifact, List[CheckResult]]:
    rows = []
    verdicts = []
    all_checks: List[CheckResult] = []
    for i in range(config.selfcheck_seeds):
        seed = (config.seed + i) % 2**64
        results = SelfCheckSuite(config, seed).run()
        verdicts.append([r.status for r in results])
        all_checks.extend(results)
        rows.extend({"seed": seed, "check": r.name, "expected": r.expected, "observed": r.detail,
                     "status": r.status} for r in results)
    if config.selfcheck_seeds > 1:
        same = all(v == verdicts[0] for v in verdicts)
        sweep = check_true("seed sweep verdicts identical", same, "identical", "identical" if same else "differ")
        all_checks.append(sweep)
        rows.append({"seed": config.seed, "check": sweep.name, "expected": sweep.expected,
                     "observed": sweep.observed, "status": sweep.status})
    status = "FAIL" if any(c.blocking for c in all_checks) else "PASS"
    return make_artifact("selfcheck", pd.DataFrame(rows), config, status=status), all_checks
