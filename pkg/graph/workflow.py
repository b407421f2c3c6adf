"""LangGraph pipeline behind ``reproduce-tables``."""
import logging
import operator
from typing import Annotated, List, Optional, TypedDict

import pandas as pd
from langgraph.graph import END, StateGraph

from experiments.hedge import HIGH_VOL_ERRORS, LOW_VOL_ERRORS, check_hedge_tables, hedge_report, leland_factor
from experiments.price import ATM_OUTLIERS, HALF_STRIKE_COSTS, atm_expected, check_costs, make_pool, price_frame
from hedging.engine import hedge_trace, leland_hedge
from hedging.study import option_cost_vs_n, terminal_portfolio_table
from models.domain import CostSchedule, MarketParams, RngSeed
from models.request import RunConfig
from models.response import CheckResult, TableArtifact
from pricing.engine import EtaPool, cost_on_pool
from stochastic import rng
from stochastic.errors import AsianHedgeError
from stochastic.paths import gbm_path, make_grid, sample_wiener
from utils.artifacts import ArtifactLog, make_artifact, make_provenance, write_dat
from utils.stats import check_range, check_true, strictly_increasing

logger = logging.getLogger("asianhedge.workflow")
if not logger.handlers:
    logging.basicConfig(level=logging.INFO)

HEDGE_SIGMAS = (0.1, 0.9)
# Cost comparison with alpha < 1/2, where C0_hat grows with n.
COST_VS_N = {"sigma": 0.05, "strike": 70.0, "alpha": 0.4}
BUY_AND_HOLD_LADDER = (1.0, 5.0, 20.0, 50.0)
TERMINAL = {"sigma": 0.1, "strike": 50.0}
FIGURE = {"sigma": 0.05, "n": 100}
FIGURE_STREAMS = rng.PATH_STREAMS + (3 << 22)


class ReproState(TypedDict):
    """State passed between the table nodes."""
    config: RunConfig
    artifacts: Annotated[List[TableArtifact], operator.add]
    checks: Annotated[List[CheckResult], operator.add]
    cost_frame: Optional[pd.DataFrame]
    summary: str


def _failed(table_id: str, config: RunConfig, error: Exception) -> TableArtifact:
    return make_artifact(table_id, pd.DataFrame(), config, status="ERROR", note=f"{type(error).__name__}: {error}")


def _status(checks: List[CheckResult]) -> str:
    return "FAIL" if any(c.blocking for c in checks) else "PASS"


class TableReproduction:
    """Runs every published table and the figure data on one configuration."""

    def __init__(self, config: RunConfig, log: ArtifactLog):
        self.config = config
        self.log = log
        self._price_pool: Optional[EtaPool] = None
        self._hedge_pool: Optional[EtaPool] = None
        self.app = self._build_workflow()

    def price_pool(self) -> EtaPool:
        if self._price_pool is None:
            self._price_pool = make_pool(self.config)
        return self._price_pool

    def hedge_pool(self) -> EtaPool:
        if self._hedge_pool is None:
            self._hedge_pool = make_pool(self.config, self.config.pool_size)
        return self._hedge_pool

    def _emit(self, artifact: TableArtifact) -> TableArtifact:
        self.log.add(artifact)
        return artifact

    def price_tables_node(self, state: ReproState):
        """Option cost ladders at K = S0 and K = S0/2."""
        config = state["config"]
        logger.info("[Node: price_tables] running", extra={"node": "price_tables"})
        artifacts, checks = [], []
        sigmas = sorted(set(config.sigma_list) | set(HALF_STRIKE_COSTS))
        for table_id, strike, expected, outliers in (
            ("table_price_atm", config.s0, atm_expected(), ATM_OUTLIERS),
            ("table_price_half_strike", config.s0 / 2.0, HALF_STRIKE_COSTS, None),
        ):
            try:
                frame = price_frame(config, strike=strike, sigma_list=sigmas, pool=self.price_pool())
                table_checks = check_costs(frame, expected, table_id, outliers)
                artifacts.append(self._emit(make_artifact(table_id, frame, config, status=_status(table_checks))))
                checks.extend(table_checks)
            except (AsianHedgeError, ValueError) as e:
                logger.warning(f"[Node: price_tables] {table_id} failed: {e}")
                artifacts.append(self._emit(_failed(table_id, config, e)))
        return {"artifacts": artifacts, "checks": checks}

    def hedge_tables_node(self, state: ReproState):
        """Convergence tables at sigma = 0.1 and 0.9 on one shared pool."""
        config = state["config"]
        logger.info("[Node: hedge_tables] running", extra={"node": "hedge_tables"})
        reports = {}
        frames = {}
        errors = []
        for sigma, published in zip(HEDGE_SIGMAS, (LOW_VOL_ERRORS, HIGH_VOL_ERRORS)):
            table_id = f"table_hedge_sigma_{sigma:g}"
            try:
                report = hedge_report(config, sigma=sigma, pool=self.hedge_pool())
            except (AsianHedgeError, ValueError) as e:
                logger.warning(f"[Node: hedge_tables] {table_id} failed: {e}")
                errors.append(self._emit(_failed(table_id, config, e)))
                continue
            frame = report.to_frame()
            frame["published_mean_err"] = frame["n"].map(published)
            reports[sigma] = report
            frames[table_id] = frame
        checks = []
        status = "INFO"
        if len(reports) == len(HEDGE_SIGMAS):
            checks = check_hedge_tables(reports[HEDGE_SIGMAS[0]], reports[HEDGE_SIGMAS[1]])
            status = _status(checks)
        artifacts = [self._emit(make_artifact(t, f, config, status=status)) for t, f in frames.items()]
        return {"artifacts": errors + artifacts, "checks": checks}

    def cost_vs_n_node(self, state: ReproState):
        """C0 against C0_hat(n), plus the buy-and-hold ladder."""
        config = state["config"]
        logger.info("[Node: cost_vs_n] running", extra={"node": "cost_vs_n"})
        params = MarketParams(sigma=COST_VS_N["sigma"], s0=config.s0, strike=COST_VS_N["strike"])
        try:
            frame = option_cost_vs_n(params, config.kappa0, COST_VS_N["alpha"], config.n_list,
                                     self.price_pool(), leland_factor(config))
            checks = [check_true("C0_hat strictly increasing in n (alpha=0.4)", strictly_increasing(frame["c0_hat"]),
                                 "strictly increasing", ", ".join(f"{c:.4f}" for c in frame["c0_hat"]))]
            ladder_params = MarketParams(sigma=1.0, s0=config.s0, strike=config.s0)
            ladder = pd.DataFrame([
                {"sigma_hat": s, "c0_hat": c.c0, "se": c.se}
                for s, c in ((s, cost_on_pool(self.price_pool(), ladder_params, s)) for s in BUY_AND_HOLD_LADDER)
            ])
            costs = ladder["c0_hat"].tolist()
            ladder_checks = [
                check_true("buy-and-hold ladder nondecreasing", all(b >= a for a, b in zip(costs, costs[1:])),
                           "nondecreasing", ", ".join(f"{c:.4f}" for c in costs)),
                check_range("C0_hat at sigma_hat=50", costs[-1], 0.95 * config.s0, float("inf")),
            ]
        except (AsianHedgeError, ValueError) as e:
            logger.warning(f"[Node: cost_vs_n] failed: {e}")
            return {"artifacts": [self._emit(_failed("table_cost_vs_n", config, e))], "cost_frame": None}
        artifacts = [
            self._emit(make_artifact("table_cost_vs_n", frame, config, status=_status(checks))),
            self._emit(make_artifact("table_buy_and_hold", ladder, config, status=_status(ladder_checks))),
        ]
        return {"artifacts": artifacts, "checks": checks + ladder_checks, "cost_frame": frame}

    def terminal_portfolio_node(self, state: ReproState):
        """Fresh single-path realizations; never compared with published values."""
        config = state["config"]
        logger.info("[Node: terminal_portfolio] running", extra={"node": "terminal_portfolio"})
        params = MarketParams(sigma=TERMINAL["sigma"], s0=config.s0, strike=TERMINAL["strike"])
        try:
            frame = terminal_portfolio_table(params, config.n_list, config.seed, self.hedge_pool())
            artifact = make_artifact("table_terminal_portfolio", frame, config, status="NON-REPRODUCIBLE",
                                     note="single fresh path per n")
        except (AsianHedgeError, ValueError) as e:
            logger.warning(f"[Node: terminal_portfolio] failed: {e}")
            artifact = _failed("table_terminal_portfolio", config, e)
        return {"artifacts": [self._emit(artifact)]}

    def figures_node(self, state: ReproState):
        """gnuplot data for the path, holdings, bond and portfolio figures."""
        config = state["config"]
        logger.info("[Node: figures] running", extra={"node": "figures"})
        provenance = make_provenance(config)
        out = self.log.out_dir
        try:
            params = MarketParams(sigma=FIGURE["sigma"], s0=config.s0, strike=config.strike)
            schedule = CostSchedule(kappa0=config.kappa0, alpha=config.alpha, n=FIGURE["n"])
            w = sample_wiener(make_grid(FIGURE["n"]), RngSeed(seed=config.seed, stream=FIGURE_STREAMS))
            path = gbm_path(params, w, config.quadrature)
            strategy, outcome = leland_hedge(path, params, schedule, self.hedge_pool(), leland_factor(config))
            trace = hedge_trace(path, strategy, outcome, self.hedge_pool())
        except (AsianHedgeError, ValueError) as e:
            logger.warning(f"[Node: figures] failed: {e}")
            return {}
        write_dat("fig_asset_path", {"t": trace.t, "S": trace.S, "xi": trace.xi}, out, provenance)
        write_dat("fig_gamma", {"t": trace.t, "gamma": trace.gamma}, out, provenance)
        write_dat("fig_beta", {"t": trace.t, "beta": trace.beta}, out, provenance)
        write_dat("fig_portfolio", {"t": trace.t, "V": trace.capital, "G": trace.option_value,
                                    "payoff": trace.payoff}, out, provenance)
        cost_frame = state.get("cost_frame")
        if cost_frame is not None:
            write_dat("fig_cost_vs_n", {"n": cost_frame.n, "c0": cost_frame.c0, "c0_hat": cost_frame.c0_hat},
                      out, provenance)
        return {}

    def summary_node(self, state: ReproState):
        config = state["config"]
        checks = state.get("checks") or []
        frame = pd.DataFrame([
            {"check": c.name, "expected": c.expected, "observed": c.detail, "status": c.status} for c in checks
        ] + [
            {"check": a.table_id, "expected": "table produced", "observed": a.note or "", "status": a.status}
            for a in state.get("artifacts") or [] if a.status == "ERROR"
        ])
        failed = int(frame["status"].isin(["FAIL", "ERROR"]).sum()) if not frame.empty else 0
        status = "PASS" if failed == 0 else "FAIL"
        self._emit(make_artifact("summary", frame, config, status=status))
        logger.info(f"[Node: summary] {len(frame)} verdicts, {failed} not passing", extra={"node": "summary"})
        return {"summary": status}

    def _build_workflow(self):
        builder = StateGraph(ReproState)
        builder.add_node("price_tables", self.price_tables_node)
        builder.add_node("hedge_tables", self.hedge_tables_node)
        builder.add_node("cost_vs_n", self.cost_vs_n_node)
        builder.add_node("terminal_portfolio", self.terminal_portfolio_node)
        builder.add_node("figures", self.figures_node)
        builder.add_node("summarize", self.summary_node)

        builder.set_entry_point("price_tables")
        builder.add_edge("price_tables", "hedge_tables")
        builder.add_edge("hedge_tables", "cost_vs_n")
        builder.add_edge("cost_vs_n", "terminal_portfolio")
        builder.add_edge("terminal_portfolio", "figures")
        builder.add_edge("figures", "summarize")
        builder.add_edge("summarize", END)
        return builder.compile()

    def run(self) -> ReproState:
        return self.app.invoke({"config": self.config, "artifacts": [], "checks": [], "cost_frame": None,
                                "summary": ""})
