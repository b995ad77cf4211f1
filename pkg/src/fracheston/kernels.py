"""Analytic kernels, mixing densities and CIR covariance.

The power kernel t^(alpha-1)/Gamma(alpha) mixes over exponentials
exp(-t*x) against the density mu; its rough counterpart uses mu_tilde.
The CIR covariance is the closed form driving the long-range-dependence
computation cov_nu, which is evaluated by Gauss-Jacobi quadrature graded
into the integrable edge singularities.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import roots_jacobi

from .params import ModelParams, Regime, gamma_fn


def frac_kernel(t: float, alpha: float) -> float:
    """Fractional integration kernel t^(alpha-1)/Gamma(alpha), t > 0."""
    if t <= 0:
        raise ValueError("kernel is singular at t <= 0")
    if not (0.0 < alpha < 1.0):
        raise ValueError("fractional kernel requires alpha in (0, 1)")
    return t ** (alpha - 1.0) / gamma_fn(alpha)


def mu_density(x: float, alpha: float) -> float:
    """Density of the exponential mixing measure of the fractional kernel.

    mu(dx) = dx / (x^alpha * Gamma(alpha) * Gamma(1-alpha)); by reflection
    this equals sin(pi*alpha)/(pi * x^alpha).
    """
    if x <= 0:
        raise ValueError("mu density requires x > 0")
    if not (0.0 < alpha < 1.0):
        raise ValueError("mu requires alpha in (0, 1)")
    return 1.0 / (x ** alpha * gamma_fn(alpha) * gamma_fn(1.0 - alpha))


def mu_tilde_density(x: float, alpha: float) -> float:
    """Density of the rough mixing measure: x^(alpha+1)/(Gamma(-alpha)*Gamma(alpha+1))."""
    if x <= 0:
        raise ValueError("mu_tilde density requires x > 0")
    if not (-1.0 < alpha < -0.5):
        raise ValueError("mu_tilde requires alpha in (-1, -1/2)")
    return x ** (alpha + 1.0) / (gamma_fn(-alpha) * gamma_fn(alpha + 1.0))


def cov_cir(s: float, u: float, p: ModelParams) -> float:
    """Closed-form covariance Cov(Z_s, Z_u) of the CIR process."""
    if s < 0 or u < 0:
        raise ValueError("times must be nonnegative")
    k, th, z0, sig = p.kappa, p.theta, p.z0, p.sigma
    return sig ** 2 * (th / (2 * k) * math.exp(-k * abs(s - u))
                       + (z0 - th) / k * math.exp(-k * min(s, u))
                       - (2 * z0 - th) / (2 * k) * math.exp(-k * (s + u)))


def cov_nu(t: float, lag: float, p: ModelParams, quad_nodes: int = 60) -> float:
    """Covariance Cov(nu_{t+lag}, nu_t) of the fractional volatility.

    Double integral of (t-s)^(alpha-1) (t+lag-u)^(alpha-1) Cov(Z_s, Z_u)
    over [0,t] x [0,t+lag], divided by Gamma(alpha)^2.  The integrable
    power singularities at s -> t and u -> t+lag are absorbed into
    Gauss-Jacobi weights (exponent alpha-1), so the quadrature sees only
    the smooth covariance factor.
    """
    if p.regime is not Regime.FRACTIONAL:
        raise ValueError("cov_nu is defined in the fractional regime only")
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return 0.0
    alpha = p.alpha
    xs, ws = roots_jacobi(quad_nodes, alpha - 1.0, 0.0)
    # s-axis over [0, t]: s = t*(x+1)/2, (t-s)^(alpha-1) folded into weights
    s_nodes = t * (xs + 1.0) / 2.0
    s_scale = (t / 2.0) ** alpha
    # u-axis over [0, t+lag]
    tu = t + lag
    u_nodes = tu * (xs + 1.0) / 2.0
    u_scale = (tu / 2.0) ** alpha
    S, U = np.meshgrid(s_nodes, u_nodes, indexing="ij")
    k, th, z0, sig = p.kappa, p.theta, p.z0, p.sigma
    cov = sig ** 2 * (th / (2 * k) * np.exp(-k * np.abs(S - U))
                      + (z0 - th) / k * np.exp(-k * np.minimum(S, U))
                      - (2 * z0 - th) / (2 * k) * np.exp(-k * (S + U)))
    total = ws @ cov @ ws
    return float(s_scale * u_scale * total / gamma_fn(alpha) ** 2)
