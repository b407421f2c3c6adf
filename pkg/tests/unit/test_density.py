import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from density.diagnostics import bound_diagnostic, density_cdf, kde_distance, kolmogorov_distance, normalization
from density.engine import (
    DensityEngine,
    bridge_from_wiener,
    default_z_grid,
    density_derivatives,
    direct_eta_samples,
    functional_F,
    functional_K,
    functional_P,
    quadrature_weights,
    solve_a,
)
from models.domain import RngSeed
from stochastic.errors import EstimatorError, SampleQualityError
from stochastic.paths import make_grid, sample_wiener, sample_wiener_batch

SIGMA = 0.5
NODES = 128


@pytest.fixture(scope="module")
def bridge():
    return bridge_from_wiener(sample_wiener(make_grid(NODES), RngSeed(seed=21)))


@pytest.fixture(scope="module")
def estimate():
    engine = DensityEngine(SIGMA, nodes=NODES, threads=2)
    return engine.estimate(1.0, default_z_grid(1.0, SIGMA, 120), 5000, seed=3, derivatives=True)


def test_quadrature_weights():
    w, u, kmax, kstar = quadrature_weights(8, 0.3)
    assert w.sum() == pytest.approx(0.3)
    assert kmax == 3 and kstar == 2
    assert u[kstar] < 0.3 <= u[kstar] + 1 / 8
    with pytest.raises(ValueError):
        quadrature_weights(8, 0.1)
    with pytest.raises(ValueError):
        quadrature_weights(8, 1.5)


def test_bridge_is_pinned(bridge):
    assert bridge.values[0] == 0.0 and bridge.values[-1] == 0.0


def test_root_solves_functional(bridge):
    root = solve_a(bridge, 0.7, 0.65, SIGMA)
    assert functional_F(bridge, 0.7, root.a, SIGMA) == pytest.approx(0.65, abs=1e-9)
    assert root.bracket_lo <= root.a <= root.bracket_hi
    assert functional_K(bridge, 0.7, root.a, SIGMA) > 0.0


def test_root_is_monotone_in_z(bridge):
    roots = [solve_a(bridge, 1.0, z, SIGMA).a for z in (0.5, 0.8, 1.0, 1.5, 3.0)]
    assert all(b > a for a, b in zip(roots, roots[1:]))


def test_p_is_v_derivative(bridge):
    v = 0.5 + 0.3 / NODES
    eps = 1e-7
    slope = (functional_F(bridge, v + eps, 0.4, SIGMA) - functional_F(bridge, v, 0.4, SIGMA)) / eps
    assert slope == pytest.approx(functional_P(bridge, v, 0.4, SIGMA), rel=1e-5)


def test_below_floor_raises(bridge):
    with pytest.raises(EstimatorError):
        solve_a(bridge, 1.0, 1e-6, SIGMA)


def test_density_normalization(estimate):
    mass, mean = normalization(estimate)
    assert mass == pytest.approx(1.0, abs=0.02)
    assert mean == pytest.approx(1.0, abs=0.02)
    assert np.all(estimate.q >= 0.0)
    assert estimate.q_z is not None and estimate.q_v is not None
    cdf = density_cdf(estimate)
    assert np.all(np.diff(cdf) >= 0.0)


def test_density_independent_of_threads():
    z = default_z_grid(0.6, SIGMA, 20)
    one = DensityEngine(SIGMA, nodes=64, threads=1).estimate(0.6, z, 300, seed=4)
    many = DensityEngine(SIGMA, nodes=64, threads=3).estimate(0.6, z, 300, seed=4)
    np.testing.assert_array_equal(one.q, many.q)


def test_density_matches_direct_samples(estimate):
    direct = direct_eta_samples(1.0, SIGMA, 5000, NODES, seed=3, threads=2)
    assert kolmogorov_distance(estimate, direct) < 0.04


def test_tail_shape_fit(estimate):
    fit = bound_diagnostic(1.0, SIGMA, estimate)
    assert fit.kappa_hat > 0.0
    assert fit.r_squared > 0.8


def test_partial_moment_full_mass():
    engine = DensityEngine(SIGMA, nodes=64, threads=2)
    full = engine.partial_moment(1.0, 1e-6, 4000, seed=8)
    assert abs(full.value - 1.0) < 4 * full.se + 1e-12
    half = engine.partial_moment(1.0, 1.0, 4000, seed=8)
    assert 0.0 < half.value < full.value


def test_discard_threshold():
    engine = DensityEngine(SIGMA, nodes=64)
    engine._check_discards(1, 1000)
    with pytest.raises(SampleQualityError):
        engine._check_discards(2, 1000)


def test_invalid_grid_rejected():
    engine = DensityEngine(SIGMA, nodes=64)
    with pytest.raises(ValueError):
        engine.estimate(1.0, [1.0, 0.5], 10, seed=1)
    with pytest.raises(ValueError):
        DensityEngine(-1.0)


def test_direct_samples_reject_bad_v():
    with pytest.raises(ValueError):
        direct_eta_samples(0.0, SIGMA, 10, 10, seed=1)
    assert math.isfinite(direct_eta_samples(0.5, SIGMA, 10, 10, seed=1).mean())


def test_density_derivatives_fill_columns():
    z = default_z_grid(0.6, SIGMA, 15)
    est = density_derivatives(0.6, z, SIGMA, 200, seed=2, nodes=64, threads=1)
    assert est.q_z.shape == (15,) and est.q_v.shape == (15,)
    assert np.all(np.isfinite(est.q_z)) and np.all(np.isfinite(est.q_v))
    assert set(est.to_frame().columns) == {"v", "z", "q", "se", "q_z", "q_v"}


def test_bridge_midpoint_variance():
    grid = make_grid(16)
    w = sample_wiener_batch(grid, 21, 100_000, threads=2)
    mid = w[:, 8] - grid.times[8] * w[:, -1]
    assert np.var(mid) == pytest.approx(0.25, rel=0.03)
    assert abs(mid.mean()) < 4 * 0.5 / math.sqrt(mid.size)


def test_q_z_matches_finite_difference():
    z = np.linspace(0.5, 2.0, 301)
    est = DensityEngine(SIGMA, nodes=NODES, threads=2).estimate(1.0, z, 2000, seed=6, derivatives=True)
    slope = np.gradient(est.q, z)
    scale = np.abs(est.q_z).max()
    np.testing.assert_allclose(est.q_z[1:-1], slope[1:-1], atol=0.01 * scale)


def test_q_v_matches_finite_difference():
    # v and v +- h share one quadrature cell
    v, h = 0.5 + 0.3 / NODES, 2e-4
    z = default_z_grid(v, SIGMA, 40)
    engine = DensityEngine(SIGMA, nodes=NODES, threads=2)
    est = engine.estimate(v, z, 2000, seed=6, derivatives=True)
    up = engine.estimate(v + h, z, 2000, seed=6).q
    down = engine.estimate(v - h, z, 2000, seed=6).q
    slope = (up - down) / (2 * h)
    np.testing.assert_allclose(est.q_v, slope, atol=0.01 * np.abs(est.q_v).max())


def test_q_z_integrates_to_zero(estimate):
    total = trapezoid(estimate.q_z, estimate.z_grid)
    assert abs(total) < 0.01 * np.abs(estimate.q_z).max()


def test_standard_error_shrinks_with_samples():
    z = default_z_grid(1.0, SIGMA, 30)
    engine = DensityEngine(SIGMA, nodes=64, threads=2)
    small = engine.estimate(1.0, z, 1000, seed=12)
    large = engine.estimate(1.0, z, 2000, seed=12)
    live = small.se > 1e-3 * small.q.max()
    ratio = np.median(large.se[live] / small.se[live])
    assert 0.6 <= ratio <= 0.85


@pytest.mark.slow
def test_density_matches_kernel_estimate():
    est = DensityEngine(SIGMA, nodes=NODES, threads=2).estimate(1.0, default_z_grid(1.0, SIGMA, 120), 20_000,
                                                                seed=3)
    direct = direct_eta_samples(1.0, SIGMA, 40_000, NODES, seed=3, threads=2)
    assert kde_distance(est, direct) <= 0.05
