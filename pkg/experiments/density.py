"""Density table with its quality diagnostics."""
import logging
from typing import List, Optional

import pandas as pd

from density.diagnostics import bound_diagnostic, kde_distance, kolmogorov_distance, normalization
from density.engine import DensityEngine, default_z_grid, direct_eta_samples
from models.request import RunConfig
from models.response import CheckResult, DensityEstimate, TableArtifact
from utils.artifacts import make_artifact
from utils.stats import check_range, check_true

logger = logging.getLogger("asianhedge.experiments")

NORMALIZATION_TOL = 0.01
MAX_KOLMOGOROV = 0.02


def estimate_density(config: RunConfig, samples: Optional[int] = None) -> DensityEstimate:
    engine = DensityEngine(config.sigma, nodes=config.density_nodes, threads=config.threads)
    z = default_z_grid(config.v, config.sigma, config.z_points)
    return engine.estimate(config.v, z, samples or config.samples, config.seed, derivatives=True)


def density_checks(config: RunConfig, est: DensityEstimate, samples: Optional[int] = None) -> List[CheckResult]:
    """Mass, mean, distance to direct samples and the tail-shape fit."""
    mass, mean = normalization(est)
    v = est.v
    checks = [
        check_range("density mass", mass, 1.0 - NORMALIZATION_TOL, 1.0 + NORMALIZATION_TOL),
        check_range("density mean / v", mean / v, 1.0 - NORMALIZATION_TOL, 1.0 + NORMALIZATION_TOL),
    ]
    direct = direct_eta_samples(v, est.sigma, samples or config.samples, config.density_nodes, config.seed,
                                threads=config.threads)
    ks = kolmogorov_distance(est, direct)
    checks.append(check_range("kolmogorov distance", ks, 0.0, MAX_KOLMOGOROV))
    try:
        fit = bound_diagnostic(v, est.sigma, est)
        checks.append(check_true("tail fit", fit.passed, "kappa > 0, R2 >= 0.9",
                                 f"kappa={fit.kappa_hat:.4g} R2={fit.r_squared:.4f} points={fit.points}"))
    except ValueError as e:
        checks.append(check_true("tail fit", False, "kappa > 0, R2 >= 0.9", str(e)))
    logger.info(f"[Density] mass={mass:.5f} mean={mean:.5f} ks={ks:.4f} kde={kde_distance(est, direct):.4f}")
    return checks


def checks_frame(checks: List[CheckResult]) -> pd.DataFrame:
    return pd.DataFrame([
        {"check": c.name, "expected": c.expected, "observed": c.detail, "status": c.status} for c in checks
    ])


def run_density(config: RunConfig) -> List[TableArtifact]:
    est = estimate_density(config)
    checks = density_checks(config, est)
    status = "FAIL" if any(c.blocking for c in checks) else "PASS"
    return [
        make_artifact("density", est.to_frame(), config),
        make_artifact("density_checks", checks_frame(checks), config, status=status),
    ]
