import math

import pytest

from fracheston import (ModelParams, Regime, default_params, hurst_of_alpha,
                        merton_ratio, regime_of_alpha)


def test_regime_classification():
    assert regime_of_alpha(0.0) is Regime.CLASSICAL_HESTON
    assert regime_of_alpha(0.5) is Regime.FRACTIONAL
    assert regime_of_alpha(-0.75) is Regime.ROUGH
    for bad in (1.0, -0.5, -1.0, 2.0, -0.3):
        with pytest.raises(ValueError):
            regime_of_alpha(bad)


def test_alpha_hurst_roundtrip():
    for alpha in (-0.9, -0.6, 0.0, 0.3, 0.99):
        p_alpha = 2.0 * hurst_of_alpha(alpha) - 1.0
        assert abs(p_alpha - alpha) < 1e-15


def test_default_params_regimes():
    assert default_params(alpha=0.75).regime is Regime.FRACTIONAL
    assert default_params(alpha=-0.75).regime is Regime.ROUGH
    assert default_params(alpha=0.0).regime is Regime.CLASSICAL_HESTON


def test_feller_violation_rejected():
    with pytest.raises(ValueError, match="Feller"):
        default_params(sigma=1.0)  # 2*6*0.05 = 0.6 < 1.0


def test_validation_errors():
    with pytest.raises(ValueError):
        default_params(gamma=0.0)
    with pytest.raises(ValueError):
        default_params(gamma=1.5)
    with pytest.raises(ValueError):
        default_params(w0=0.0)
    with pytest.raises(ValueError):
        default_params(v0=-1.0)
    with pytest.raises(ValueError):
        default_params().with_(rho=1.0)
    with pytest.raises(ValueError):
        default_params(alpha=-0.4)


def test_derived_constants():
    p = default_params()  # lam=0.5, gamma=-2
    d = p.derived()
    assert d.eta == pytest.approx(0.5 * (-2.0) * 0.25 / 3.0)
    assert d.eta == pytest.approx(-1.0 / 12.0)
    assert d.c_exponent == 1.0  # rho = 0
    p7 = p.with_(rho=0.7)
    c = p7.derived().c_exponent
    assert c == pytest.approx(3.0 / (3.0 - 2.0 * 0.49))


def test_merton_ratio():
    assert merton_ratio(default_params()) == pytest.approx(1.0 / 6.0)
    # gamma -> 0 limit recovers the log-utility fraction lam
    assert merton_ratio(default_params(gamma=1e-12)) == pytest.approx(0.5)


def test_with_replaces_and_revalidates():
    p = default_params()
    q = p.with_(z0=0.1)
    assert q.z0 == 0.1 and p.z0 == 0.05
    with pytest.raises(ValueError):
        p.with_(sigma=5.0)


def test_frozen():
    p = default_params()
    with pytest.raises(Exception):
        p.z0 = 1.0
