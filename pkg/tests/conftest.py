"""Shared fixtures and the --runslow switch for paper-scale acceptance runs."""
from pathlib import Path

import pandas as pd
import pytest

from models.domain import MarketParams, TimeGrid
from pricing.engine import EtaPool
from stochastic.paths import AssetPath

DATA_DIR = Path(__file__).parent / "data"


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run paper-scale acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def market():
    return MarketParams(sigma=0.1, s0=100.0, strike=100.0)


@pytest.fixture(scope="session")
def small_pool():
    return EtaPool.sample(4000, 50, seed=7, threads=1)


@pytest.fixture(scope="session")
def fixture_frame():
    return pd.read_csv(DATA_DIR / "fixture_path.csv")


@pytest.fixture
def fixture_path(fixture_frame):
    n = len(fixture_frame) - 1
    return AssetPath(
        grid=TimeGrid(n=n),
        s_values=fixture_frame["S"].to_numpy(),
        xi_values=fixture_frame["xi"].to_numpy(),
        sigma=0.2,
        s0=100.0,
    )


@pytest.fixture
def tiny_config_values(tmp_path):
    """Overrides that keep a full command under a few seconds."""
    return {
        "samples": 2000,
        "pool_size": 500,
        "paths": 10,
        "n_inner": 20,
        "n_list": "20,40",
        "sigma_list": "0.1,1.0",
        "density_nodes": 64,
        "z_points": 40,
        "threads": 2,
        "out_dir": str(tmp_path / "out"),
    }
