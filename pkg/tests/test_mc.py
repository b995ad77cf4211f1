import math

import numpy as np
import pytest

from fracheston import (MeasureKind, PositivityMap, SchemeKind, StrategySpec,
                        TimeGrid, VolScheme, convergence_study, default_params,
                        fk_gradient_ratio, mc_feynman_kac, mc_utility,
                        mc_value_rough, measure_for_atoms,
                        solve_riccati_finite)
from fracheston.mc import McEstimate, _map_batches


@pytest.fixture
def quant_scheme(params):
    qm = measure_for_atoms(32, params.alpha, MeasureKind.MU)
    return VolScheme(SchemeKind.QUANTIZED_FRACTIONAL, qm=qm)


def test_mc_estimate_validation():
    with pytest.raises(ValueError):
        McEstimate(mean=0.0, std_error=0.0, n_paths=1, master_seed=0,
                   functional_tag="x")


def test_map_batches_order_independent_of_threads():
    def batch(start, stop):
        return np.arange(start, stop, dtype=float)

    a = _map_batches(batch, 1000, threads=1, batch_size=64)
    b = _map_batches(batch, 1000, threads=4, batch_size=64)
    assert np.array_equal(a, np.arange(1000.0))
    assert np.array_equal(a, b)


def test_feynman_kac_thread_determinism(params, quant_scheme):
    grid = TimeGrid.from_horizon(1.0, 0.01)
    one = mc_feynman_kac(params, quant_scheme, 3000, grid, 11, threads=1)
    four = mc_feynman_kac(params, quant_scheme, 3000, grid, 11, threads=4)
    assert one.mean == four.mean
    assert one.std_error == four.std_error


def test_feynman_kac_bond_case(params, quant_scheme):
    p = params.with_(lam=0.0)
    grid = TimeGrid.from_horizon(1.0, 0.01)
    est = mc_feynman_kac(p, quant_scheme, 100, grid, 11)
    assert est.mean == pytest.approx(math.exp(p.gamma * p.r), rel=1e-14)
    assert est.std_error == pytest.approx(0.0, abs=1e-16)


def test_feynman_kac_matches_affine(params, quant_scheme):
    grid = TimeGrid.from_horizon(1.0, 0.005)
    est = mc_feynman_kac(params, quant_scheme, 8000, grid, 21, threads=4)
    sol = solve_riccati_finite(quant_scheme.qm, params, ode_step=0.005)
    vp, pb = sol.at(1.0)
    affine = math.exp(pb + vp * params.z0)
    assert abs(est.mean - affine) <= max(3.0 * est.std_error, 2e-4 * affine)


def test_utility_bond_case(params, quant_scheme):
    p = params.with_(lam=0.0)
    grid = TimeGrid.from_horizon(1.0, 0.01)
    est = mc_utility(p, StrategySpec.merton(), quant_scheme,
                     PositivityMap.IDENTITY, 100, grid, 11)
    bond = p.w0 ** p.gamma / p.gamma * math.exp(p.gamma * p.r)
    assert est.mean == pytest.approx(bond, rel=1e-14)
    assert est.std_error == pytest.approx(0.0, abs=1e-16)


def test_utility_strategy_specs(params, quant_scheme):
    grid = TimeGrid.from_horizon(1.0, 0.01)
    merton = mc_utility(params, StrategySpec.merton(), quant_scheme,
                        PositivityMap.IDENTITY, 500, grid, 31)
    const = mc_utility(params, StrategySpec.constant(1.0 / 6.0), quant_scheme,
                       PositivityMap.IDENTITY, 500, grid, 31)
    assert merton.mean == const.mean  # same fraction, same streams
    bad = StrategySpec(kind=StrategySpec.affine_correction(0.0).kind)
    with pytest.raises(ValueError):
        mc_utility(params, bad, quant_scheme, PositivityMap.IDENTITY,
                   500, grid, 31)


def test_mc_value_rough_validation(rough_params):
    qm = measure_for_atoms(16, rough_params.alpha, MeasureKind.MU_TILDE)
    grid = TimeGrid.from_horizon(1.0, 0.01)
    with pytest.raises(ValueError):
        mc_value_rough(rough_params.with_(rho=0.5), qm,
                       PositivityMap.ABSOLUTE, 100, grid, 1)
    with pytest.raises(ValueError):
        mc_value_rough(rough_params,
                       measure_for_atoms(16, 0.75, MeasureKind.MU),
                       PositivityMap.ABSOLUTE, 100, grid, 1)


def test_mc_value_rough_bond_case(rough_params):
    p = rough_params.with_(lam=0.0)
    qm = measure_for_atoms(16, p.alpha, MeasureKind.MU_TILDE)
    grid = TimeGrid.from_horizon(1.0, 0.01)
    est = mc_value_rough(p, qm, PositivityMap.ABSOLUTE, 100, grid, 5)
    bond = p.w0 ** p.gamma / p.gamma * math.exp(p.gamma * p.r)
    assert est.mean == pytest.approx(bond, rel=1e-14)


def test_gradient_ratio_tracks_varphi(params, quant_scheme):
    grid = TimeGrid.from_horizon(1.0, 0.005)
    ratio = fk_gradient_ratio(params, quant_scheme, 4000, grid, 77, threads=2)
    sol = solve_riccati_finite(quant_scheme.qm, params, ode_step=0.005)
    assert ratio == pytest.approx(sol.at(1.0)[0], rel=0.05)


def test_correlated_case_uses_drift_corrected_process(quant_scheme):
    p = default_params(rho=0.7, v0=0.01)
    p0 = default_params(rho=0.0, v0=0.01)
    grid = TimeGrid.from_horizon(1.0, 0.01)
    est7 = mc_feynman_kac(p, quant_scheme, 2000, grid, 41)
    est0 = mc_feynman_kac(p0, quant_scheme, 2000, grid, 41)
    assert est7.mean != est0.mean


def test_convergence_study(params):
    grid = TimeGrid.from_horizon(1.0, 0.01)
    qm = measure_for_atoms(16, params.alpha, MeasureKind.MU)
    qms = [qm, qm.refined(), qm.refined().refined()]
    rows = convergence_study(params, qms, 1000, grid, 61, threads=2)
    assert [r.level_atoms for r in rows] == [q.n_atoms for q in qms]
    assert all(r.monotonicity_violations == 0 for r in rows)
    kernel_errs = [r.kernel_error for r in rows]
    assert kernel_errs == sorted(kernel_errs, reverse=True)
    assert all(r.epsilon >= 0.0 for r in rows)
    assert math.isnan(rows[-1].value_gap_to_next)
    with pytest.raises(ValueError):
        convergence_study(default_params(alpha=-0.75), qms, 100, grid, 61)
