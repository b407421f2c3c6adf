"""argparse front end. Exit codes: 0 ok, 1 acceptance fail, 2 config, 3 estimator, 4 sample quality."""
import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

from config.loader import ensure_out_dir, load_run_config
from experiments.density import run_density
from experiments.hedge import run_hedge
from experiments.price import run_price
from experiments.selfcheck import run_selfcheck
from graph.workflow import TableReproduction
from models.request import RunConfig
from models.response import ErrorResponse
from stochastic.errors import AcceptanceFailure, AsianHedgeError, EstimatorError
from utils.artifacts import ArtifactLog

logger = logging.getLogger("asianhedge.cli")
if not logger.handlers:
    logging.basicConfig(level=logging.INFO)

EXIT_OK = 0
EXIT_FAIL = AcceptanceFailure.exit_code

# Arguments that steer the CLI itself rather than the run configuration.
_NON_CONFIG = {"command", "handler", "config"}


def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    parent.add_argument("--config", help="KEY=VALUE run-config file")
    parent.add_argument("--seed", type=int, help="64-bit root seed")
    parent.add_argument("--threads", type=int, help="worker threads")
    parent.add_argument("--out", dest="out_dir", help="output directory")
    parent.add_argument("--paper-scale", dest="paper_scale", action="store_true",
                        help="full sample counts of the original study")
    parent.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        type=str.upper)
    parent.add_argument("--pool-size", dest="pool_size", type=int, help="frozen pricing pool for hedges")
    parent.add_argument("--quadrature", choices=["left", "trapezoid"])
    return parent


def _market_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--s0", type=float, help="initial asset price")
    p.add_argument("--strike", type=float, help="strike K")
    p.add_argument("--n-inner", dest="n_inner", type=int, help="inner quadrature nodes N")


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="asianhedge",
        description="Monte Carlo pricing and Leland hedging of arithmetic Asian calls.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    price = sub.add_parser("price", parents=[common], argument_default=argparse.SUPPRESS,
                           help="option cost across a volatility ladder")
    _market_flags(price)
    price.add_argument("--sigma-list", dest="sigma_list", help="comma-separated volatilities")
    price.add_argument("--samples", type=int, help="Monte Carlo samples L")
    price.set_defaults(handler=cmd_price)

    hedge = sub.add_parser("hedge", parents=[common], argument_default=argparse.SUPPRESS,
                           help="Leland hedge convergence over rebalance counts")
    _market_flags(hedge)
    hedge.add_argument("--sigma", type=float)
    hedge.add_argument("--kappa0", type=float)
    hedge.add_argument("--alpha", type=float)
    hedge.add_argument("--n-list", dest="n_list", help="comma-separated rebalance counts")
    hedge.add_argument("--paths", type=int, help="hedged paths M")
    hedge.add_argument("--refinement", type=int, help="path nodes per rebalance interval")
    hedge.add_argument("--dump-paths", dest="dump_paths", action="store_true", help="write per-path rows")
    hedge.add_argument("--sabotage-leland", dest="sabotage_leland", action="store_true", help=argparse.SUPPRESS)
    hedge.set_defaults(handler=cmd_hedge)

    density = sub.add_parser("density", parents=[common], argument_default=argparse.SUPPRESS,
                             help="density of the exponential functional with diagnostics")
    density.add_argument("--sigma", type=float)
    density.add_argument("--v", type=float, help="remaining time v in (0, 1]")
    density.add_argument("--samples", type=int, help="bridge samples L")
    density.add_argument("--nodes", dest="density_nodes", type=int, help="bridge nodes m")
    density.add_argument("--z-points", dest="z_points", type=int)
    density.set_defaults(handler=cmd_density)

    reproduce = sub.add_parser("reproduce-tables", parents=[common], argument_default=argparse.SUPPRESS,
                               help="every published table, figure data and a PASS/FAIL summary")
    _market_flags(reproduce)
    reproduce.add_argument("--samples", type=int)
    reproduce.add_argument("--paths", type=int)
    reproduce.add_argument("--kappa0", type=float)
    reproduce.add_argument("--alpha", type=float)
    reproduce.add_argument("--n-list", dest="n_list")
    reproduce.add_argument("--sigma-list", dest="sigma_list")
    reproduce.add_argument("--sabotage-leland", dest="sabotage_leland", action="store_true", help=argparse.SUPPRESS)
    reproduce.set_defaults(handler=cmd_reproduce_tables)

    selfcheck = sub.add_parser("selfcheck", parents=[common], argument_default=argparse.SUPPRESS,
                               help="invariant suite at reduced sample counts")
    selfcheck.add_argument("--seeds", dest="selfcheck_seeds", type=int, help="number of seeds swept")
    selfcheck.add_argument("--sabotage-leland", dest="sabotage_leland", action="store_true", help=argparse.SUPPRESS)
    selfcheck.set_defaults(handler=cmd_selfcheck)
    return parser


def _report(log: ArtifactLog) -> None:
    for path in log.paths:
        print(path)


def cmd_price(config: RunConfig) -> int:
    log = ArtifactLog(config.out_dir)
    log.add(run_price(config))
    _report(log)
    return EXIT_OK


def cmd_hedge(config: RunConfig) -> int:
    log = ArtifactLog(config.out_dir)
    for artifact in run_hedge(config):
        log.add(artifact)
    _report(log)
    return EXIT_OK


def cmd_density(config: RunConfig) -> int:
    log = ArtifactLog(config.out_dir)
    for artifact in run_density(config):
        log.add(artifact)
    _report(log)
    return EXIT_FAIL if log.failed() else EXIT_OK


def cmd_reproduce_tables(config: RunConfig) -> int:
    log = ArtifactLog(config.out_dir)
    state = TableReproduction(config, log).run()
    _report(log)
    return EXIT_OK if state["summary"] == "PASS" else EXIT_FAIL


def cmd_selfcheck(config: RunConfig) -> int:
    log = ArtifactLog(config.out_dir)
    artifact, checks = run_selfcheck(config)
    log.add(artifact)
    _report(log)
    failed = [c.name for c in checks if c.blocking]
    if failed:
        logger.warning(f"[SelfCheck] failing checks: {', '.join(failed)}")
    return EXIT_FAIL if failed else EXIT_OK


def _emit_error(error: AsianHedgeError) -> int:
    payload = ErrorResponse(error=error.message, code=error.code)
    print(payload.model_dump_json(), file=sys.stderr)
    return error.exit_code


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler: Callable[[RunConfig], int] = args.handler
    try:
        config = load_run_config(getattr(args, "config", None), _overrides(args))
        ensure_out_dir(config)
        logging.getLogger().setLevel(config.log_level)
        logger.info(f"[CLI] {args.command} config_hash={config.config_hash()} seed={config.seed}")
        return handler(config)
    except AsianHedgeError as e:
        logger.error(f"[CLI] {args.command} failed: {e.message}")
        return _emit_error(e)
    except ValueError as e:
        return _emit_error(EstimatorError(str(e)))
