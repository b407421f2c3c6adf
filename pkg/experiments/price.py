"""Option cost tables across a volatility ladder."""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from models.domain import MarketParams
from models.request import RunConfig
from models.response import CheckResult, TableArtifact
from pricing.engine import EtaPool, cost_on_pool
from utils.artifacts import make_artifact
from utils.stats import check_close, price_tolerance

logger = logging.getLogger("asianhedge.experiments")
if not logger.handlers:
    logging.basicConfig(level=logging.INFO)

# Published option costs with S0 = 100, N = 100.
ATM_COSTS: Dict[float, float] = {
    0.01: 0.229, 0.05: 1.371, 0.1: 2.303, 0.5: 11.346, 1.0: 22.473, 1.5: 32.941, 2.0: 42.466,
}
# Published ATM cells the ladder cannot reproduce. 1.371 breaks the linear small-sigma trend of
# the same table (5 * 0.229 = 1.145) and the small-noise value sigma * S0 / sqrt(6 pi) = 1.152.
ATM_OUTLIERS: Dict[float, str] = {
    0.05: "published 1.371 is off the small-sigma value sigma*S0/sqrt(6 pi) = 1.152",
}
# K = S0 / 2. At sigma = 0.01 the option is always in the money, so C0 = S0 - K.
HALF_STRIKE_COSTS: Dict[float, Tuple[float, Optional[float]]] = {
    0.01: (50.0, 0.25),
    2.0: (59.443, None),
}


def make_pool(config: RunConfig, samples: Optional[int] = None) -> EtaPool:
    return EtaPool.sample(samples or config.samples, config.n_inner, config.seed, config.quadrature,
                          config.threads)


def price_frame(
    config: RunConfig,
    strike: Optional[float] = None,
    sigma_list: Optional[Sequence[float]] = None,
    pool: Optional[EtaPool] = None,
) -> pd.DataFrame:
    """Columns sigma, K, L, N, c0, se on one shared pool."""
    pool = pool or make_pool(config)
    strike = config.strike if strike is None else strike
    params = MarketParams(sigma=1.0, s0=config.s0, strike=strike)
    rows = []
    for sigma in sigma_list or config.sigma_list:
        cost = cost_on_pool(pool, params, sigma)
        rows.append({"sigma": sigma, "K": strike, "L": cost.L, "N": cost.n_inner,
                     "c0": cost.c0, "se": cost.se})
        logger.info(f"[Price] sigma={sigma} K={strike} c0={cost.c0:.4f} se={cost.se:.4f}")
    return pd.DataFrame(rows)


def check_costs(
    frame: pd.DataFrame,
    expected: Dict[float, Tuple[float, Optional[float]]],
    label: str,
    outliers: Optional[Dict[float, str]] = None,
) -> List[CheckResult]:
    """Rows whose sigma has a published value, each within its tolerance.

    Rows listed in ``outliers`` are still compared but report NON-REPRODUCIBLE on a miss.
    """
    outliers = outliers or {}
    checks = []
    for row in frame.itertuples(index=False):
        if row.sigma not in expected:
            continue
        target, fixed_tol = expected[row.sigma]
        tol = fixed_tol if fixed_tol is not None else price_tolerance(target, row.se)
        check = check_close(f"{label} sigma={row.sigma:g}", row.c0, target, tol)
        if row.sigma in outliers:
            check = check.model_copy(update={"known_deviation": outliers[row.sigma]})
        checks.append(check)
    return checks


def atm_expected() -> Dict[float, Tuple[float, Optional[float]]]:
    return {s: (c, None) for s, c in ATM_COSTS.items()}


def run_price(config: RunConfig) -> TableArtifact:
    frame = price_frame(config)
    return make_artifact("price", frame, config)
