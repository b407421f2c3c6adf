import math

import numpy as np
import pytest

from hedging.engine import (
    accounting,
    build_leland_strategy,
    compensator_check,
    error_decomposition,
    exact_hedge_no_cost,
    hedge_trace,
    leland_hedge,
    lemma3_statistic,
    simulate_hedge,
)
from hedging.study import convergence_study, lemma3_study, option_cost_vs_n, per_path_frame
from hedging.volatility import modified_volatility
from models.domain import SQRT_2_OVER_PI, SQRT_8_OVER_PI, CostSchedule, MarketParams, RngSeed
from models.response import HedgeStrategy
from stochastic import rng
from stochastic.errors import EstimatorError
from stochastic.paths import gbm_path, make_grid, sample_wiener, sample_wiener_batch


def _path(params, n, stream=0):
    return gbm_path(params, sample_wiener(make_grid(n), RngSeed(seed=17, stream=stream)))


def test_modified_volatility_value():
    mv = modified_volatility(0.1, CostSchedule(kappa0=0.05, alpha=0.5, n=37))
    assert mv.sigma_hat**2 == pytest.approx(0.0179789, rel=1e-5)
    assert mv.sigma_hat == pytest.approx(0.134085, rel=1e-5)
    assert modified_volatility(0.3, CostSchedule(kappa0=0.0, alpha=0.5, n=10)).sigma_hat == pytest.approx(0.3)


def test_modified_volatility_grows_below_half():
    hats = [modified_volatility(0.1, CostSchedule(kappa0=0.05, alpha=0.4, n=n)).sigma_hat
            for n in (10, 100, 1000, 10_000)]
    assert all(b > a for a, b in zip(hats, hats[1:]))


def test_modified_volatility_constant_at_half():
    hats = [modified_volatility(0.2, CostSchedule(kappa0=0.05, alpha=0.5, n=n)).sigma_hat for n in (20, 500, 1000)]
    assert hats == pytest.approx([hats[0]] * 3, rel=1e-12)


def test_accounting_identity():
    s = np.array([100.0, 102.0, 99.0, 101.0])
    gamma = np.array([0.9, 0.6, 0.2])
    acc = accounting(s, gamma, 0.01, 2.0)
    np.testing.assert_allclose(acc["bond"][:-1], acc["capital"][:-1] - gamma * s[:-1])
    assert acc["bond"][-1] == acc["capital"][-1]
    # rebalances at t_1 and t_2, then the close at t_3; the opening buy is free
    expected_volume = 102.0 * 0.3 + 99.0 * 0.4 + 101.0 * 0.2
    assert acc["volume"] == pytest.approx(expected_volume)
    gains = 0.9 * 2.0 + 0.6 * -3.0 + 0.2 * 2.0
    assert acc["v1"] == pytest.approx(2.0 + gains - 0.01 * expected_volume)
    steps = gamma * np.diff(s) - 0.01 * s[1:] * np.abs(np.append(gamma[1:], 0.0) - gamma)
    np.testing.assert_allclose(np.diff(acc["capital"]), steps)


def test_constant_holding_telescopes(market):
    path = _path(market, 10)
    strategy = HedgeStrategy(grid=make_grid(10), gamma=np.full(10, 0.4), sigma_hat=0.1, strike=100.0)
    out = simulate_hedge(path, strategy, 0.0, 3.0)
    assert out.v1 == pytest.approx(3.0 + 0.4 * (path.s_values[-1] - path.s_values[0]))
    assert out.error == pytest.approx(out.v1 - out.payoff)


def test_constant_holding_pays_only_to_close(market):
    path = _path(market, 10)
    strategy = HedgeStrategy(grid=make_grid(10), gamma=np.full(10, 0.4), sigma_hat=0.1, strike=100.0)
    out = simulate_hedge(path, strategy, 0.01, 3.0)
    assert out.volume == pytest.approx(0.4 * path.s_values[-1])
    assert out.total_cost == pytest.approx(0.01 * 0.4 * path.s_values[-1])


def test_cost_matches_rebalance_volume(market, small_pool):
    path = _path(market, 20)
    schedule = CostSchedule(kappa0=0.05, alpha=0.5, n=20)
    strategy, outcome = leland_hedge(path, market, schedule, small_pool)
    held = np.append(strategy.gamma, 0.0)
    volume = float(np.sum(path.s_values[1:] * np.abs(np.diff(held))))
    assert outcome.total_cost == pytest.approx(schedule.kappa_n * volume)


def test_idle_portfolio(market):
    path = _path(market, 10)
    strategy = HedgeStrategy(grid=make_grid(10), gamma=np.zeros(10), sigma_hat=0.1, strike=100.0)
    out = simulate_hedge(path, strategy, 0.05, 3.0)
    assert out.v1 == 3.0 and out.total_cost == 0.0


def test_cost_is_linear_in_kappa(market, small_pool):
    path = _path(market, 20)
    strategy = build_leland_strategy(path, market, 0.13, 20, small_pool)
    one = simulate_hedge(path, strategy, 0.01, 2.0)
    two = simulate_hedge(path, strategy, 0.02, 2.0)
    assert two.total_cost == pytest.approx(2 * one.total_cost)


def test_single_period(market, small_pool):
    path = _path(market, 1)
    strategy = build_leland_strategy(path, market, 0.1, 1, small_pool)
    out = simulate_hedge(path, strategy, 0.01, 2.0)
    g = strategy.gamma[0]
    s0, s1 = path.s_values
    assert out.v1 == pytest.approx(2.0 + g * (s1 - s0) - 0.01 * s1 * g)


def test_holdings_bounds_and_saturation(small_pool):
    params = MarketParams(sigma=0.2, s0=100.0, strike=20.0)
    path = _path(params, 50)
    strategy = build_leland_strategy(path, params, 0.25, 50, small_pool)
    t_prev = make_grid(50).times[:-1]
    assert np.all((strategy.gamma >= 0.0) & (strategy.gamma <= 1.0 - t_prev))
    saturated = path.xi_values[:-1] >= params.strike
    assert saturated.any()
    np.testing.assert_array_equal(strategy.gamma[saturated], 1.0 - t_prev[saturated])


def test_grid_mismatch_rejected(market, small_pool):
    path = _path(market, 10)
    with pytest.raises(ValueError):
        build_leland_strategy(path, market, 0.1, 3, small_pool)


def test_refined_path_hedges_on_coarse_grid(market, small_pool):
    path = _path(market, 40)
    strategy, outcome = leland_hedge(path, market, CostSchedule(kappa0=0.05, alpha=0.5, n=10), small_pool)
    assert strategy.gamma.shape == (10,)
    assert outcome.capital.shape == (11,)


def test_degenerate_hedge_replicates(small_pool):
    params = MarketParams.degenerate(s0=100.0, strike=60.0)
    w = sample_wiener(make_grid(20), RngSeed(seed=1))
    path = gbm_path(params, w)
    hedge_params = MarketParams(sigma=1e-6, s0=100.0, strike=60.0)
    out = exact_hedge_no_cost(path, hedge_params, 20, small_pool)
    assert out.payoff == pytest.approx(40.0)
    assert out.v1 == pytest.approx(40.0, abs=1e-3)


def test_compensator_zero_without_costs(market, small_pool):
    check = compensator_check(_path(market, 20), market, CostSchedule(kappa0=0.0, alpha=0.5, n=20), small_pool)
    assert check.lhs == 0.0 and check.rhs == 0.0


def test_compensator_saturated_path(small_pool):
    params = MarketParams(sigma=0.1, s0=100.0, strike=5.0)
    path = _path(params, 40)
    schedule = CostSchedule(kappa0=0.05, alpha=0.5, n=40)
    check = compensator_check(path, params, schedule, small_pool)
    sigma_hat = modified_volatility(0.1, schedule).sigma_hat
    strategy = build_leland_strategy(path, params, sigma_hat, 40, small_pool)
    saturated_cost = simulate_hedge(path, strategy, schedule.kappa_n, 0.0).total_cost
    assert check.lhs == pytest.approx(saturated_cost)
    assert check.rhs < 0.1 * check.lhs


def test_lemma3_statistic_edge_cases(market):
    path = _path(market, 100)
    zero = lemma3_statistic(path, np.zeros(101), 100)
    assert zero.lhs == 0.0 and zero.rhs == 0.0
    flat = gbm_path(MarketParams.degenerate(s0=100.0, strike=100.0), sample_wiener(make_grid(100), RngSeed(seed=2)))
    flat_stat = lemma3_statistic(flat, np.ones(101), 100)
    assert flat_stat.lhs == 0.0 and flat_stat.rhs == 0.0
    with pytest.raises(ValueError):
        lemma3_statistic(path, np.ones(50), 100)


def test_lemma3_limit_small():
    params = MarketParams(sigma=0.1, s0=100.0, strike=100.0)
    res = lemma3_study(params, 2000, 60, seed=5, threads=2)
    target = SQRT_2_OVER_PI * 10.0
    assert res["lhs"].value == pytest.approx(target, rel=0.05)
    assert res["rhs"].value == pytest.approx(target, rel=0.05)


def test_error_decomposition_adds_up(market, small_pool):
    path = _path(market, 40)
    parts = error_decomposition(path, market, CostSchedule(kappa0=0.05, alpha=0.5, n=20), small_pool)
    total = parts.tracking + parts.compensator + parts.cost + parts.residual
    assert total == pytest.approx(parts.error)
    assert parts.cost <= 0.0


def test_hedge_trace_columns(market, small_pool):
    path = _path(market, 20)
    strategy, outcome = leland_hedge(path, market, CostSchedule(kappa0=0.05, alpha=0.5, n=20), small_pool)
    trace = hedge_trace(path, strategy, outcome, small_pool)
    assert list(trace.columns) == ["t", "S", "xi", "gamma", "beta", "capital", "option_value", "payoff"]
    assert len(trace) == 21
    np.testing.assert_allclose(trace.beta + trace.gamma * trace.S, trace.capital)
    assert trace.option_value.iloc[-1] == pytest.approx(trace.payoff.iloc[-1])


def test_convergence_study_small(market, small_pool):
    report = convergence_study(market, 0.05, 0.5, [10, 40], 30, seed=3, pool=small_pool, keep_per_path=True)
    assert [r.n for r in report.rows] == [10, 40]
    assert all(r.se > 0 and r.mean_cost > 0 for r in report.rows)
    assert all(math.isfinite(r.compensator_ratio) for r in report.rows)
    frame = per_path_frame(report)
    assert len(frame) == 60
    assert {"seed", "stream", "row", "v1", "f1", "err", "cost"} <= set(frame.columns)
    np.testing.assert_allclose(frame.err, frame.v1 - frame.f1)
    assert not frame.duplicated(["n", "stream", "row"]).any()
    assert set(frame.stream[frame.n == 10]).isdisjoint(frame.stream[frame.n == 40])


def test_dumped_stream_redraws_path(market, small_pool):
    report = convergence_study(market, 0.0, 0.5, [10], 5, seed=3, pool=small_pool, keep_per_path=True)
    frame = per_path_frame(report)
    assert frame.stream.tolist() == [rng.PATH_STREAMS] * 5
    assert frame.row.tolist() == list(range(5))

    streams, rows = rng.row_streams(10, base_stream=7, chunk=4)
    assert streams.tolist() == [7, 7, 7, 7, 8, 8, 8, 8, 9, 9]
    assert rows.tolist() == [0, 1, 2, 3, 0, 1, 2, 3, 0, 1]
    batch = sample_wiener_batch(make_grid(10), 3, 10, base_stream=7, chunk=4, threads=2)
    redrawn = rng.generator(RngSeed(seed=3, stream=int(streams[5]))).standard_normal((4, 10))[rows[5]]
    np.testing.assert_allclose(batch[5, 1:], np.cumsum(redrawn * math.sqrt(0.1)))


def test_fine_average_keeps_rebalance_grid(market, small_pool):
    coarse = convergence_study(market, 0.05, 0.5, [10], 40, seed=3, pool=small_pool)
    fine = convergence_study(market, 0.05, 0.5, [10], 40, seed=3, pool=small_pool, path_nodes=100)
    assert np.isfinite(fine.rows[0].mean_err)
    assert fine.rows[0].mean_err != coarse.rows[0].mean_err
    same = convergence_study(market, 0.05, 0.5, [10], 40, seed=3, pool=small_pool, path_nodes=10)
    assert same.rows[0].mean_err == coarse.rows[0].mean_err


def test_convergence_without_costs(market, small_pool):
    report = convergence_study(market, 0.0, 0.5, [10, 20], 20, seed=3, pool=small_pool)
    assert all(r.mean_cost == 0.0 for r in report.rows)
    assert list(report.to_frame().columns[:6]) == ["n", "mean_err", "se", "mean_abs_err", "mean_cost",
                                                   "compensator_ratio"]


def test_convergence_rejects_bad_inputs(market, small_pool):
    with pytest.raises(ValueError):
        convergence_study(market, 0.05, 0.5, [40, 10], 20, seed=3, pool=small_pool)
    with pytest.raises(ValueError):
        convergence_study(market, 0.05, 0.5, [10], 1, seed=3, pool=small_pool)


def test_cost_vs_n_increases_below_half(small_pool):
    params = MarketParams(sigma=0.05, s0=100.0, strike=100.0)
    frame = option_cost_vs_n(params, 0.05, 0.4, [20, 100, 1000], small_pool)
    assert frame.c0.nunique() == 1
    assert frame.c0_hat.is_monotonic_increasing
    assert (frame.c0_hat > frame.c0).all()


def test_estimator_error_carries_index():
    err = EstimatorError("non-finite G_y estimate", j=4)
    assert err.j == 4
    assert SQRT_8_OVER_PI == pytest.approx(2 * SQRT_2_OVER_PI)
