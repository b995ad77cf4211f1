import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracheston import (MeasureKind, approx_kernel, cell_barycenter,
                        cell_weight, dyadic_chain, frac_kernel, make_partition,
                        measure_for_atoms, quantize, refine)


@given(lo=st.floats(1e-6, 10.0), width1=st.floats(1e-6, 10.0),
       width2=st.floats(1e-6, 10.0), alpha=st.floats(0.05, 0.95))
@settings(max_examples=100, deadline=None)
def test_weight_additivity_mu(lo, width1, width2, alpha):
    mid, hi = lo + width1, lo + width1 + width2
    whole = cell_weight(lo, hi, alpha, MeasureKind.MU)
    parts = (cell_weight(lo, mid, alpha, MeasureKind.MU)
             + cell_weight(mid, hi, alpha, MeasureKind.MU))
    assert parts == pytest.approx(whole, rel=1e-12, abs=1e-300)


@given(lo=st.floats(1e-6, 10.0), width1=st.floats(1e-6, 10.0),
       width2=st.floats(1e-6, 10.0), alpha=st.floats(-0.95, -0.55))
@settings(max_examples=100, deadline=None)
def test_weight_additivity_mu_tilde(lo, width1, width2, alpha):
    mid, hi = lo + width1, lo + width1 + width2
    whole = cell_weight(lo, hi, alpha, MeasureKind.MU_TILDE)
    parts = (cell_weight(lo, mid, alpha, MeasureKind.MU_TILDE)
             + cell_weight(mid, hi, alpha, MeasureKind.MU_TILDE))
    assert parts == pytest.approx(whole, rel=1e-12, abs=1e-300)


@given(lo=st.floats(1e-5, 5.0), width=st.floats(1e-5, 20.0),
       alpha=st.floats(0.05, 0.95))
@settings(max_examples=100, deadline=None)
def test_barycenter_strictly_inside(lo, width, alpha):
    hi = lo + width
    b = cell_barycenter(lo, hi, alpha, MeasureKind.MU)
    assert lo < b < hi


def test_cell_validation():
    with pytest.raises(ValueError):
        cell_weight(0.0, 1.0, 0.5, MeasureKind.MU)
    with pytest.raises(ValueError):
        cell_weight(2.0, 1.0, 0.5, MeasureKind.MU)
    with pytest.raises(ValueError):
        cell_barycenter(1.0, 2.0, -0.75, MeasureKind.MU)  # wrong kind for alpha


def test_make_partition_shape():
    p = make_partition(8, 0.5, MeasureKind.MU)
    pts = np.asarray(p.points)
    assert p.n_cells == 8
    assert np.all(np.diff(pts) > 0)
    assert pts[-1] == pytest.approx(64.0)


def test_refine_is_superset():
    p = make_partition(6, 0.5, MeasureKind.MU)
    r = refine(p)
    assert r.level == p.level + 1
    assert set(p.points).issubset(set(r.points))
    assert np.all(np.diff(r.points) > 0)
    with pytest.raises(ValueError):
        refine(p, low_shrink=1.0)


def test_quantize_structure():
    qm = quantize(make_partition(10, 0.3, MeasureKind.MU), 0.3, MeasureKind.MU)
    assert qm.n_atoms == 10
    assert np.all(qm.weights > 0)
    assert np.all(np.diff(qm.nodes) > 0)
    pts = np.asarray(qm.source.points)
    assert np.all(qm.nodes > pts[:-1]) and np.all(qm.nodes < pts[1:])


def test_total_mass_matches_closed_form():
    alpha = 0.6
    qm = quantize(make_partition(50, alpha, MeasureKind.MU), alpha, MeasureKind.MU)
    pts = qm.source.points
    expected = cell_weight(pts[0], pts[-1], alpha, MeasureKind.MU)
    assert qm.weights.sum() == pytest.approx(expected, rel=1e-12)


def test_dyadic_chain_nesting_and_monotone_kernel():
    chain = dyadic_chain(16, 0.5, MeasureKind.MU, 5)
    for a, b in zip(chain, chain[1:]):
        assert set(a.source.points).issubset(set(b.source.points))
    for t in (0.1, 0.5, 1.0):
        vals = [approx_kernel(t, qm) for qm in chain]
        assert all(v2 >= v1 - 1e-14 for v1, v2 in zip(vals, vals[1:]))
        # the quantized transform stays below the true kernel (Jensen)
        assert vals[-1] <= frac_kernel(t, 0.5) + 1e-14


def test_rough_kernel_convergence():
    alpha = -0.75
    chain = dyadic_chain(16, alpha, MeasureKind.MU_TILDE, 6)
    t = 1.0
    exact = (alpha + 1.0) * t ** (-alpha - 2.0) / math.gamma(-alpha)
    vals = [approx_kernel(t, qm) for qm in chain]
    assert all(v2 >= v1 - 1e-14 for v1, v2 in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(exact, rel=1e-3)


def test_measure_for_atoms():
    qm = measure_for_atoms(200, 0.75, MeasureKind.MU)
    assert qm.n_atoms >= 200
    with pytest.raises(ValueError):
        measure_for_atoms(16, 0.75, MeasureKind.MU_TILDE)


def test_approx_kernel_validation():
    qm = measure_for_atoms(16, 0.75, MeasureKind.MU)
    with pytest.raises(ValueError):
        approx_kernel(0.0, qm)


def test_to_csv(tmp_path):
    qm = measure_for_atoms(16, 0.75, MeasureKind.MU)
    path = tmp_path / "qm.csv"
    qm.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "index,xi_lo,xi_hi,node,weight"
    assert len(lines) == qm.n_atoms + 1
    first = lines[1].split(",")
    assert float(first[3]) == pytest.approx(qm.nodes[0])
