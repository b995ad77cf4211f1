import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracheston import (MeasureKind, PathBundle, RngSpec, TimeGrid,
                        brownian_batch, brownian_pair, cov_cir,
                        measure_for_atoms, optimal_wealth_closed_form,
                        sample_cir_exact, simulate_cir, simulate_factors,
                        simulate_factors_rough, simulate_stock,
                        simulate_tilde_z, simulate_wealth)


def test_time_grid():
    g = TimeGrid.from_horizon(1.0, 0.001)
    assert g.steps == 1000
    assert g.horizon == pytest.approx(1.0)
    assert g.times[0] == 0.0 and g.times[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        TimeGrid.from_horizon(1.0, 0.0003)
    with pytest.raises(ValueError):
        TimeGrid(h=-0.1, steps=10)


def test_rng_streams_reproducible(coarse_grid):
    a = brownian_pair(RngSpec(42, 7), coarse_grid, 0.0)
    b = brownian_pair(RngSpec(42, 7), coarse_grid, 0.0)
    c = brownian_pair(RngSpec(42, 8), coarse_grid, 0.0)
    assert np.array_equal(a.dBz, b.dBz) and np.array_equal(a.dBs, b.dBs)
    assert not np.array_equal(a.dBz, c.dBz)


def test_brownian_correlation_and_scale():
    grid = TimeGrid.from_horizon(100.0, 0.01)
    bp = brownian_pair(RngSpec(3, 0), grid, 0.7)
    corr = np.corrcoef(bp.dBz, bp.dBs)[0, 1]
    assert corr == pytest.approx(0.7, abs=0.02)
    assert bp.dBz.std() == pytest.approx(math.sqrt(grid.h), rel=0.05)


def test_brownian_batch_matches_streams(coarse_grid):
    bp = brownian_batch(42, range(3), coarse_grid, 0.3)
    one = brownian_pair(RngSpec(42, 1), coarse_grid, 0.3)
    assert np.array_equal(bp.dBz[1], one.dBz)
    assert np.array_equal(bp.dBs[1], one.dBs)


def test_cir_nonnegative_and_start(params, coarse_grid):
    bp = brownian_batch(1, range(50), coarse_grid, 0.0)
    z = simulate_cir(params, coarse_grid, bp.dBz)
    assert z.shape == (50, coarse_grid.steps + 1)
    assert np.all(z >= 0.0)
    assert np.all(z[:, 0] == params.z0)


def test_cir_moments_match_exact_sampler(params, rng):
    grid = TimeGrid.from_horizon(1.0, 0.002)
    n = 4000
    bp = brownian_batch(8, range(n), grid, 0.0)
    z = simulate_cir(params, grid, bp.dBz)[:, -1]
    exact = sample_cir_exact(params, 1.0, 200000, rng)
    se_mean = math.hypot(z.std(ddof=1) / math.sqrt(n),
                         exact.std(ddof=1) / math.sqrt(len(exact)))
    assert abs(z.mean() - exact.mean()) <= 3.5 * se_mean
    # analytic mean and variance
    mean_th = params.theta + (params.z0 - params.theta) * math.exp(-params.kappa)
    assert exact.mean() == pytest.approx(mean_th, rel=0.01)
    assert exact.var(ddof=1) == pytest.approx(cov_cir(1.0, 1.0, params), rel=0.02)


def test_tilde_z_bit_identical_at_rho_zero(params, coarse_grid):
    qm = measure_for_atoms(16, params.alpha, MeasureKind.MU)
    bp = brownian_batch(5, range(4), coarse_grid, 0.0)
    z_plain = simulate_cir(params, coarse_grid, bp.dBz)
    z_tilde, nu = simulate_tilde_z(params, qm, coarse_grid, bp.dBz)
    assert np.array_equal(z_plain, z_tilde)
    assert nu.shape == z_tilde.shape
    assert np.all(nu[:, 0] == params.v0)


def test_tilde_z_differs_at_nonzero_rho(params, coarse_grid):
    qm = measure_for_atoms(16, params.alpha, MeasureKind.MU)
    p = params.with_(rho=0.7, v0=0.01)
    bp = brownian_batch(5, range(4), coarse_grid, 0.7)
    z_plain = simulate_cir(p, coarse_grid, bp.dBz)
    z_tilde, _ = simulate_tilde_z(p, qm, coarse_grid, bp.dBz)
    assert not np.array_equal(z_plain, z_tilde)


@given(a=st.floats(-2.0, 2.0), b=st.floats(-2.0, 2.0))
@settings(max_examples=25, deadline=None)
def test_factor_linearity(a, b):
    grid = TimeGrid.from_horizon(0.5, 0.01)
    qm = measure_for_atoms(8, 0.75, MeasureKind.MU)
    gen = np.random.default_rng(0)
    z1 = gen.random(grid.steps + 1)
    z2 = gen.random(grid.steps + 1)
    lhs = simulate_factors(qm, a * z1 + b * z2, grid)
    rhs = a * simulate_factors(qm, z1, grid) + b * simulate_factors(qm, z2, grid)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_exponential_integrator_vs_fine_euler(params):
    # exact exponential update vs an Euler oracle run at h/100
    grid = TimeGrid.from_horizon(1.0, 0.01)
    fine = TimeGrid.from_horizon(1.0, 0.0001)
    qm = measure_for_atoms(16, params.alpha, MeasureKind.MU)
    bp = brownian_batch(17, range(1), grid, 0.0)
    z = simulate_cir(params, grid, bp.dBz)[0]
    y = simulate_factors(qm, z, grid)
    z_fine = np.repeat(z[:-1], 100)
    y_fine = np.zeros(len(qm.nodes))
    for k in range(fine.steps):
        y_fine = y_fine + (z_fine[k] - qm.nodes * y_fine) * fine.h
    assert np.max(np.abs(y[-1] - y_fine)) <= 5e-4


def test_rough_factors_match_riemann_sum():
    grid = TimeGrid.from_horizon(1.0, 0.002)
    qm = measure_for_atoms(8, -0.75, MeasureKind.MU_TILDE)
    gen = np.random.default_rng(2)
    z = np.cumsum(gen.standard_normal(grid.steps + 1)) * 0.01 + 1.0
    y = simulate_factors_rough(qm, z, grid)
    t = grid.times
    k = grid.steps  # check the terminal slice against direct integration
    for j, x in enumerate(qm.nodes):
        s = t[:-1]
        direct = np.sum((z[k] - z[:-1]) * np.exp(-(t[k] - s) * x)) * grid.h
        assert y[k, j] == pytest.approx(direct, rel=0.02, abs=1e-4)


def test_wealth_bond_only(params, coarse_grid):
    nu = np.full((2, coarse_grid.steps + 1), 0.04)
    dBs = np.zeros((2, coarse_grid.steps))
    w = simulate_wealth(0.0, nu, coarse_grid, dBs, params)
    assert np.allclose(w[:, -1], params.w0 * math.exp(params.r), rtol=1e-12)


def test_wealth_strategy_forms_agree(params, coarse_grid):
    bp = brownian_batch(9, range(3), coarse_grid, 0.0)
    nu = np.full((3, coarse_grid.steps + 1), 0.04)
    w_scalar = simulate_wealth(0.25, nu, coarse_grid, bp.dBs, params)
    w_array = simulate_wealth(np.full((3, coarse_grid.steps), 0.25), nu,
                              coarse_grid, bp.dBs, params)
    w_callable = simulate_wealth(lambda t, n: 0.25, nu, coarse_grid, bp.dBs, params)
    assert np.allclose(w_scalar, w_array, rtol=1e-14)
    assert np.allclose(w_scalar, w_callable, rtol=1e-14)


def test_wealth_rejects_negative_volatility(params, coarse_grid):
    nu = np.full(coarse_grid.steps + 1, -0.01)
    with pytest.raises(ValueError):
        simulate_wealth(0.2, nu, coarse_grid, np.zeros(coarse_grid.steps), params)


def test_optimal_wealth_closed_form_is_merton_wealth(params, coarse_grid):
    bp = brownian_batch(21, range(4), coarse_grid, 0.0)
    z = simulate_cir(params, coarse_grid, bp.dBz)
    pi_star = params.lam / (1.0 - params.gamma)
    w_sim = simulate_wealth(pi_star, z, coarse_grid, bp.dBs, params)
    w_cf = optimal_wealth_closed_form(z, coarse_grid, bp.dBs, params)
    assert np.allclose(w_sim, w_cf, rtol=1e-12)


def test_stock_deterministic_when_flat(params, coarse_grid):
    nu = np.zeros(coarse_grid.steps + 1)
    s = simulate_stock(nu, coarse_grid, np.zeros(coarse_grid.steps), params)
    assert s[-1] == pytest.approx(100.0 * math.exp(params.r), rel=1e-12)


def test_path_bundle_csv(tmp_path, params, coarse_grid):
    bp = brownian_batch(2, range(1), coarse_grid, 0.0)
    z = simulate_cir(params, coarse_grid, bp.dBz)[0]
    pb = PathBundle(grid=coarse_grid, z=z, nu=z.copy())
    out = tmp_path / "bundle.csv"
    pb.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,Z,nu"
    assert len(lines) == coarse_grid.steps + 2
