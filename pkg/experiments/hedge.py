"""Leland hedge convergence runs."""
import logging
from typing import Dict, List, Optional

from hedging.engine import PricingConfig
from hedging.study import convergence_study, per_path_frame
from models.domain import SQRT_2_OVER_PI, SQRT_8_OVER_PI, MarketParams
from models.request import RunConfig
from models.response import CheckResult, ConvergenceReport, TableArtifact
from pricing.engine import EtaPool
from utils.artifacts import make_artifact
from utils.stats import check_close, check_true

logger = logging.getLogger("asianhedge.experiments")

# Published mean hedging errors, S0 = K = 100, kappa0 = 0.05, alpha = 1/2.
LOW_VOL_ERRORS: Dict[int, float] = {20: -0.3264, 50: -0.1479, 100: -0.0693, 200: -0.0097, 500: 0.0026, 1000: 0.0061}
HIGH_VOL_ERRORS: Dict[int, float] = {20: -0.7106, 50: -0.4065, 100: -0.3307, 200: -0.1938, 500: -0.0801, 1000: -0.0213}
ERROR_TOL = 0.05
ERROR_TARGETS = {20: -0.33, 1000: 0.006}


def leland_factor(config: RunConfig) -> float:
    """sqrt(8/pi), or the halved sqrt(2/pi) under the test-only sabotage flag."""
    return SQRT_2_OVER_PI if config.sabotage_leland else SQRT_8_OVER_PI


def pricing_config(config: RunConfig, pool_size: Optional[int] = None) -> PricingConfig:
    return PricingConfig(
        pool_size=pool_size or config.pool_size, n_inner=config.n_inner, seed=config.seed,
        quadrature=config.quadrature, threads=config.threads,
    )


def hedge_report(
    config: RunConfig,
    sigma: Optional[float] = None,
    pool: Optional[EtaPool] = None,
    kappa0: Optional[float] = None,
) -> ConvergenceReport:
    params = MarketParams(sigma=sigma or config.sigma, s0=config.s0, strike=config.strike)
    pricing = pricing_config(config)
    return convergence_study(
        params,
        config.kappa0 if kappa0 is None else kappa0,
        config.alpha,
        config.n_list,
        config.paths,
        config.seed,
        pricing=pricing,
        pool=pool,
        refinement=config.refinement,
        leland_factor=leland_factor(config),
        keep_per_path=config.dump_paths,
        path_nodes=config.n_inner,
    )


def report_artifacts(report: ConvergenceReport, config: RunConfig, table_id: str) -> List[TableArtifact]:
    failed = sum(r.failed_paths for r in report.rows)
    note = f"{failed} paths failed" if failed else None
    artifacts = [make_artifact(table_id, report.to_frame(), config, note=note)]
    if report.per_path:
        artifacts.append(make_artifact(f"{table_id}_paths", per_path_frame(report), config))
    return artifacts


def run_hedge(config: RunConfig) -> List[TableArtifact]:
    return report_artifacts(hedge_report(config), config, "hedge")


def check_hedge_tables(low: ConvergenceReport, high: ConvergenceReport) -> List[CheckResult]:
    """Mean errors at the ends of the grid, variance shrinkage and the volatility ordering."""
    checks = []
    by_n = {r.n: r for r in low.rows}
    for n, target in ERROR_TARGETS.items():
        if n in by_n:
            checks.append(check_close(f"hedge sigma={low.sigma:g} mean_err n={n}", by_n[n].mean_err,
                                      target, ERROR_TOL))
    if 20 in by_n and 1000 in by_n:
        ratio = by_n[1000].var_err / by_n[20].var_err
        checks.append(check_true("hedge error variance n=1000 vs n=20", ratio < 0.5, "< 0.5", f"{ratio:.4g}"))
    high_by_n = {r.n: r for r in high.rows}
    common = sorted(set(by_n) & set(high_by_n))
    larger = [abs(high_by_n[n].mean_err) > abs(by_n[n].mean_err) for n in common]
    checks.append(check_true(
        f"|mean_err| sigma={high.sigma:g} above sigma={low.sigma:g}", bool(common) and all(larger),
        "every n", f"{sum(larger)}/{len(common)} rows",
    ))
    return checks
