import math

import numpy as np
import pytest
from pydantic import ValidationError

from config.loader import ensure_out_dir, load_run_config
from models.domain import SQRT_8_OVER_PI, CostSchedule, ModifiedVol, RngSeed
from models.request import RunConfig, paper_counts
from stochastic import rng
from stochastic.errors import ConfigError, EstimatorError, SampleQualityError


def test_chunk_sizes():
    assert rng.chunk_sizes(10, 4) == [4, 4, 2]
    assert rng.chunk_sizes(8, 4) == [4, 4]
    with pytest.raises(ValueError):
        rng.chunk_sizes(0, 4)


def test_streams_are_reproducible_and_distinct():
    a = rng.generator(RngSeed(seed=1, stream=0)).standard_normal(5)
    b = rng.generator(RngSeed(seed=1, stream=0)).standard_normal(5)
    c = rng.generator(RngSeed(seed=1, stream=1)).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_map_streams_keeps_stream_order():
    out = rng.map_streams(lambda gen, size, stream: (stream, size), seed=3, total=10, base_stream=100,
                          chunk=3, threads=4)
    assert out == [(100, 3), (101, 3), (102, 3), (103, 1)]


def test_run_config_defaults():
    cfg = RunConfig()
    assert cfg.n_list == [20, 50, 100, 200, 500, 1000]
    assert cfg.kappa0 == 0.05
    assert cfg.s0 == 100.0


def test_run_config_round_trip():
    cfg = RunConfig(sigma=0.9, n_list="10,100,1000", sigma_list="0.01,2", dump_paths=True, seed=2**63 + 5)
    assert RunConfig.from_env_text(cfg.to_env_text()) == cfg


def test_config_hash_ignores_plumbing():
    a = RunConfig(threads=1, out_dir="a")
    b = RunConfig(threads=8, out_dir="b", log_level="debug")
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 16
    assert RunConfig(seed=1).config_hash() != RunConfig(seed=2).config_hash()


@pytest.mark.parametrize(
    "values",
    [
        {"n_list": "100,20"},
        {"samples": 0},
        {"paths": 1},
        {"alpha": 1.5},
        {"sigma_list": "0.1,-1"},
        {"v": 0.001, "density_nodes": 512},
        {"unknown_key": 1},
    ],
)
def test_run_config_rejects(values):
    with pytest.raises(ValidationError):
        RunConfig(**values)


def test_paper_scale_counts():
    cfg = RunConfig().paper_scaled()
    assert (cfg.samples, cfg.pool_size, cfg.paths) == (500_000, 100_000, 1000)


def test_load_precedence(tmp_path):
    file = tmp_path / "run.cfg"
    file.write_text("# hedge run\nSIGMA=0.9\nkappa0=0.02\nn_list=10,20\n")
    cfg = load_run_config(str(file), {"kappa0": 0.03, "seed": None})
    assert cfg.sigma == 0.9
    assert cfg.kappa0 == 0.03
    assert cfg.n_list == [10, 20]


def test_paper_scale_keeps_explicit_counts(tmp_path):
    file = tmp_path / "run.cfg"
    file.write_text("PATHS=40\n")
    cfg = load_run_config(str(file), {"paper_scale": True, "samples": 5000})
    assert cfg.paper_scale
    assert (cfg.samples, cfg.paths) == (5000, 40)
    assert cfg.pool_size == paper_counts()["pool_size"]


def test_paper_scale_from_file_fills_missing_counts(tmp_path):
    file = tmp_path / "run.cfg"
    file.write_text("PAPER_SCALE=true\nSAMPLES=300\n")
    cfg = load_run_config(str(file))
    assert cfg.samples == 300
    assert (cfg.pool_size, cfg.paths) == (paper_counts()["pool_size"], paper_counts()["paths"])


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "missing.cfg"))
    with pytest.raises(ConfigError) as exc:
        load_run_config(None, {"paths": "one"})
    assert exc.value.exit_code == 2
    assert "paths" in exc.value.message


def test_ensure_out_dir(tmp_path):
    out = ensure_out_dir(RunConfig(out_dir=str(tmp_path / "a" / "b")))
    assert out.is_dir()
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ConfigError):
        ensure_out_dir(RunConfig(out_dir=str(blocker / "sub")))


def test_error_codes():
    err = EstimatorError("G_y failed", j=7)
    assert err.exit_code == 3 and "j=7" in err.message
    sq = SampleQualityError("density", 5, 1000)
    assert (sq.code, sq.exit_code, sq.discarded, sq.total) == ("SAMPLE_QUALITY_ERROR", 4, 5, 1000)


def test_cost_schedule():
    s = CostSchedule(kappa0=0.05, alpha=0.5, n=100)
    assert s.kappa_n == pytest.approx(0.005)
    assert s.at(400).kappa_n == pytest.approx(0.0025)
    with pytest.raises(ValidationError):
        CostSchedule(kappa0=-0.1, alpha=0.5, n=10)


def test_modified_vol_invariants():
    with pytest.raises(ValidationError):
        ModifiedVol(sigma=0.2, sigma_hat=0.1)
    with pytest.raises(ValidationError):
        ModifiedVol(sigma=0.2, sigma_hat=math.inf)
    assert ModifiedVol(sigma=0.1, sigma_hat=0.2).leland_factor == SQRT_8_OVER_PI
