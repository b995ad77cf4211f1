"""Volatility constructions.

Four ways to turn a CIR path into a volatility path: the direct forward
Euler scheme of the fractional convolution, the direct scheme of the rough
(Marchaud-derivative) construction, and the two quantized (finite-atom
Markovian) counterparts.  Positivity maps make the rough output usable as
a variance.

Both direct schemes are discrete convolutions of the Z path; the O(k^2)
loop is the correctness baseline and the FFT path must agree with it to
1e-12 before being trusted (it is checked in the test suite and available
as method="fft", the default).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import fftconvolve

from .params import ModelParams, gamma_fn
from .quantize import MeasureKind, QuantizedMeasure
from .sim import TimeGrid


class PositivityMap(Enum):
    IDENTITY = "identity"
    ABSOLUTE = "abs"
    EXPONENTIAL = "exp"


def apply_positivity(nu_path: np.ndarray, pmap: PositivityMap) -> np.ndarray:
    """Elementwise positivity transform; Identity rejects negative entries."""
    if pmap is PositivityMap.IDENTITY:
        if np.any(nu_path < 0):
            raise ValueError("identity positivity map applied to a path with "
                             "negative entries; use abs or exp")
        return np.asarray(nu_path)
    if pmap is PositivityMap.ABSOLUTE:
        return np.abs(nu_path)
    return np.exp(nu_path)


def _causal_convolve(z: np.ndarray, w: np.ndarray, method: str) -> np.ndarray:
    """(w * z)_k = sum_{j=0}^{k-1} w[k-j] z[j] for k = 1..len(w); z is the
    step-left-endpoint slice, w[0] unused."""
    steps = len(w) - 1
    zk = z[..., :steps]
    if method == "direct":
        out = np.empty(z.shape[:-1] + (steps,))
        for k in range(1, steps + 1):
            out[..., k - 1] = np.einsum("...j,j->...", zk[..., :k], w[k:0:-1])
        return out
    full = fftconvolve(zk, np.broadcast_to(w[1:], zk.shape[:-1] + (steps,)),
                       mode="full", axes=-1) if zk.ndim > 1 else \
        fftconvolve(zk, w[1:], mode="full")
    return full[..., :steps]


def nu_fractional_euler(z_path: np.ndarray, alpha: float, grid: TimeGrid,
                        v0: float = 0.0, method: str = "fft") -> np.ndarray:
    """Forward Euler scheme of the fractional volatility convolution.

    nu_k = v0 + h^alpha sum_{j<k} ((k-j)^alpha - (k-j-1)^alpha)/Gamma(alpha+1) Z_j.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("fractional scheme requires alpha in (0, 1)")
    m = np.arange(grid.steps + 1, dtype=float)
    w = np.zeros(grid.steps + 1)
    w[1:] = (m[1:] ** alpha - m[:-1] ** alpha) / gamma_fn(alpha + 1.0)
    conv = _causal_convolve(z_path, w, method)
    nu = np.empty(z_path.shape)
    nu[..., 0] = v0
    nu[..., 1:] = v0 + grid.h ** alpha * conv
    return nu


def nu_rough_marchaud(z_path: np.ndarray, alpha: float, grid: TimeGrid,
                      v0: float = 0.0, delta: float = 0.49,
                      method: str = "fft") -> np.ndarray:
    """Forward Euler scheme of the rough (Marchaud) volatility.

    nu_k = v0 + Z_k t_k^(-alpha-1)/Gamma(-alpha)
         + (alpha+1)/((alpha+0.5) Gamma(-alpha) h^(alpha+1))
           * sum_{j<k} (Z_k - Z_j)/(k-j)^delta
             * ((k-j-1)^(delta-alpha-1) - (k-j)^(delta-alpha-1)),
    where the j = k-1 cell uses 0^(delta-alpha-1) = 0 (the exponent is
    positive) and nu_0 = v0 (the singular index-0 term is dropped).
    """
    if not (-1.0 < alpha < -0.5):
        raise ValueError("rough scheme requires alpha in (-1, -1/2)")
    if not (alpha + 1.0 < delta < 0.5):
        raise ValueError(f"delta={delta} outside the window (alpha+1, 1/2)")
    steps = grid.steps
    m = np.arange(steps + 1, dtype=float)
    # c_m = m^-delta * ((m-1)^(delta-alpha-1) - m^(delta-alpha-1)), c at m-1=0 is -m^(..)
    e = delta - alpha - 1.0  # positive inside the window
    c = np.zeros(steps + 1)
    c[1:] = m[1:] ** (-delta) * (m[:-1] ** e - m[1:] ** e)
    pref = (alpha + 1.0) / ((alpha + 0.5) * gamma_fn(-alpha) * grid.h ** (alpha + 1.0))
    conv = _causal_convolve(z_path, c, method)
    cum = np.cumsum(c[1:])
    zk = z_path[..., 1:]
    t = grid.times[1:]
    nu = np.empty(z_path.shape)
    nu[..., 0] = v0
    nu[..., 1:] = (v0 + zk * t ** (-alpha - 1.0) / gamma_fn(-alpha)
                   + pref * (zk * cum - conv))
    return nu


def nu_quantized(v0: float, qm: QuantizedMeasure, factor_matrix: np.ndarray) -> np.ndarray:
    """Finite-atom fractional volatility: nu = v0 + sum_i q_i Y^{x_i}."""
    if qm.kind is not MeasureKind.MU:
        raise ValueError("nu_quantized needs a fractional-kind measure")
    return v0 + factor_matrix @ qm.weights


def nu_quantized_paths(v0: float, qm: QuantizedMeasure, z_path: np.ndarray,
                       grid: TimeGrid) -> np.ndarray:
    """nu_quantized without materializing the factor matrix.

    Keeps only the current factor state, so batches of many paths fit in
    memory; identical numerics to simulate_factors + nu_quantized.
    """
    if qm.kind is not MeasureKind.MU:
        raise ValueError("nu_quantized_paths needs a fractional-kind measure")
    x, q = qm.nodes, qm.weights
    decay = np.exp(-x * grid.h)
    gain = (1.0 - decay) / x
    nu = np.empty(z_path.shape)
    nu[..., 0] = v0
    y = np.zeros(z_path.shape[:-1] + (len(x),))
    for k in range(grid.steps):
        y = y * decay + z_path[..., k, None] * gain
        nu[..., k + 1] = v0 + y @ q
    return nu


def nu_quantized_rough_paths(v0: float, qm: QuantizedMeasure, z_path: np.ndarray,
                             grid: TimeGrid) -> np.ndarray:
    """nu_quantized_rough without materializing the factor matrix.

    Uses Y~_t = Z_t J_t - I_t with the I-integrator updated in place and
    the deterministic weighted sum q . J precomputed per step.
    """
    if qm.kind is not MeasureKind.MU_TILDE:
        raise ValueError("nu_quantized_rough_paths needs a rough-kind measure")
    alpha = qm.alpha
    x, q = qm.nodes, qm.weights
    decay = np.exp(-x * grid.h)
    gain = (1.0 - decay) / x
    t = grid.times
    sing = np.zeros_like(t)
    sing[1:] = t[1:] ** (-alpha - 1.0) / gamma_fn(-alpha)
    # q . J_t with J_t^x = (1 - exp(-t x))/x
    qj = ((1.0 - np.exp(-np.outer(t, x))) / x) @ q
    nu = np.empty(z_path.shape)
    nu[..., 0] = v0
    i_fac = np.zeros(z_path.shape[:-1] + (len(x),))
    for k in range(grid.steps):
        i_fac = i_fac * decay + z_path[..., k, None] * gain
        zk = z_path[..., k + 1]
        nu[..., k + 1] = v0 + zk * (sing[k + 1] + qj[k + 1]) - i_fac @ q
    return nu


def nu_quantized_rough(v0: float, z_path: np.ndarray, qm: QuantizedMeasure,
                       rough_factor_matrix: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Finite-atom rough volatility:
    nu = v0 + Z_t t^(-alpha-1)/Gamma(-alpha) + sum_i q~_i Y~^{x_i};
    the t = 0 value is defined as v0.
    """
    if qm.kind is not MeasureKind.MU_TILDE:
        raise ValueError("nu_quantized_rough needs a rough-kind measure")
    alpha = qm.alpha
    t = grid.times
    sing = np.zeros_like(t)
    sing[1:] = t[1:] ** (-alpha - 1.0) / gamma_fn(-alpha)
    return v0 + z_path * sing + rough_factor_matrix @ qm.weights


class SchemeKind(Enum):
    FRACTIONAL_EULER = "fractional_euler"
    ROUGH_MARCHAUD = "rough_marchaud"
    QUANTIZED_FRACTIONAL = "quantized_fractional"
    QUANTIZED_ROUGH = "quantized_rough"
    CLASSICAL = "classical"


@dataclass(frozen=True)
class VolScheme:
    """Selector for one of the four volatility constructions."""
    kind: SchemeKind
    qm: QuantizedMeasure | None = None
    delta: float = 0.49

    def __post_init__(self):
        needs_qm = self.kind in (SchemeKind.QUANTIZED_FRACTIONAL, SchemeKind.QUANTIZED_ROUGH)
        if needs_qm and self.qm is None:
            raise ValueError(f"{self.kind.value} needs a quantized measure")
        if self.kind is SchemeKind.QUANTIZED_FRACTIONAL and self.qm.kind is not MeasureKind.MU:
            raise ValueError("quantized_fractional needs a mu-kind measure")
        if self.kind is SchemeKind.QUANTIZED_ROUGH and self.qm.kind is not MeasureKind.MU_TILDE:
            raise ValueError("quantized_rough needs a mu_tilde-kind measure")

    def nu_paths(self, p: ModelParams, z_path: np.ndarray, grid: TimeGrid) -> np.ndarray:
        if self.kind is SchemeKind.CLASSICAL:
            return np.asarray(z_path)
        if self.kind is SchemeKind.FRACTIONAL_EULER:
            return nu_fractional_euler(z_path, p.alpha, grid, v0=p.v0)
        if self.kind is SchemeKind.ROUGH_MARCHAUD:
            return nu_rough_marchaud(z_path, p.alpha, grid, v0=p.v0, delta=self.delta)
        if self.kind is SchemeKind.QUANTIZED_FRACTIONAL:
            return nu_quantized_paths(p.v0, self.qm, z_path, grid)
        return nu_quantized_rough_paths(p.v0, self.qm, z_path, grid)
