"""Monte Carlo engines and affine cross-validation.

All estimators map over per-path Philox streams in fixed stream order and
reduce with exact (fsum) summation, so results are bit-identical for any
worker count.  Common random numbers (shared master seed) are used for
every strategy or refinement-level comparison.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .params import ModelParams, Regime, merton_ratio
from .quantize import MeasureKind, QuantizedMeasure
from .riccati import solve_riccati_finite, solve_riccati_rough, value_function
from .sim import (TimeGrid, brownian_batch, simulate_cir, simulate_tilde_z,
                  simulate_wealth)
from .vol import (PositivityMap, SchemeKind, VolScheme, apply_positivity,
                  nu_quantized_rough_paths)

BATCH_SIZE = 2048


@dataclass(frozen=True)
class McEstimate:
    """Mean and standard error of one Monte Carlo functional."""
    mean: float
    std_error: float
    n_paths: int
    master_seed: int
    functional_tag: str

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError("need at least 2 paths for a standard error")


class StrategyKind(Enum):
    CONSTANT = "constant"
    MERTON = "merton"
    AFFINE_CORRECTION = "affine_correction"


@dataclass(frozen=True)
class StrategySpec:
    kind: StrategyKind
    pi: float | None = None          # for CONSTANT
    grad_ratio: float | None = None  # g_z/g estimate for AFFINE_CORRECTION

    @classmethod
    def constant(cls, pi: float) -> "StrategySpec":
        return cls(kind=StrategyKind.CONSTANT, pi=pi)

    @classmethod
    def merton(cls) -> "StrategySpec":
        return cls(kind=StrategyKind.MERTON)

    @classmethod
    def affine_correction(cls, grad_ratio: float) -> "StrategySpec":
        return cls(kind=StrategyKind.AFFINE_CORRECTION, grad_ratio=grad_ratio)


def _reduce(values: np.ndarray, master_seed: int, tag: str) -> McEstimate:
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return McEstimate(mean=mean, std_error=math.sqrt(var / n), n_paths=n,
                      master_seed=master_seed, functional_tag=tag)


def _map_batches(batch_fn, n_paths: int, threads: int = 1,
                 batch_size: int = BATCH_SIZE) -> np.ndarray:
    """Run batch_fn(start, stop) over fixed path-index slices; batch layout
    is independent of the worker count, so the concatenated output is too."""
    slices = [(s, min(s + batch_size, n_paths)) for s in range(0, n_paths, batch_size)]
    if threads <= 1 or len(slices) == 1:
        parts = [batch_fn(a, b) for a, b in slices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda ab: batch_fn(*ab), slices))
    return np.concatenate(parts)


def _integrand_paths(p: ModelParams, scheme: VolScheme, grid: TimeGrid,
                     master_seed: int, start: int, stop: int,
                     pos_map: PositivityMap = PositivityMap.IDENTITY):
    """(nu paths after positivity map, Brownian pair, raw nu) for one batch."""
    bp = brownian_batch(master_seed, range(start, stop), grid, p.rho)
    if p.rho != 0.0 and scheme.kind is SchemeKind.QUANTIZED_FRACTIONAL:
        z, nu = simulate_tilde_z(p, scheme.qm, grid, bp.dBz)
    else:
        z = simulate_cir(p, grid, bp.dBz)
        nu = scheme.nu_paths(p, z, grid)
    return apply_positivity(nu, pos_map), bp, z


def mc_feynman_kac(p: ModelParams, scheme: VolScheme, n_paths: int,
                   grid: TimeGrid, master_seed: int, threads: int = 1,
                   pos_map: PositivityMap = PositivityMap.IDENTITY) -> McEstimate:
    """Estimate the Laplace-transform representation of the affine factor:

    E[exp(int_0^T (gamma r / c + eta/c * nu_s) ds)]

    with left-endpoint time quadrature; at rho != 0 the driving process is
    the drift-corrected Z-tilde, at rho = 0 plain Z.  In the rough regime
    nu enters through the positivity map.
    """
    d = p.derived()
    c = d.c_exponent
    h = grid.h

    def batch(start, stop):
        nu, _, _ = _integrand_paths(p, scheme, grid, master_seed, start, stop, pos_map)
        integral = h * np.sum(nu[..., :-1], axis=-1)
        return np.exp(p.gamma * p.r / c * grid.horizon + d.eta / c * integral)

    values = _map_batches(batch, n_paths, threads)
    return _reduce(values, master_seed, f"feynman_kac[{scheme.kind.value}]")


def _strategy_paths(p: ModelParams, strategy: StrategySpec, nu, z):
    if strategy.kind is StrategyKind.CONSTANT:
        return strategy.pi
    if strategy.kind is StrategyKind.MERTON:
        return merton_ratio(p)
    if strategy.grad_ratio is None:
        raise ValueError("affine correction strategy needs a g_z/g estimate")
    d = p.derived()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(nu[..., :-1] > 0, z[..., :-1] / np.maximum(nu[..., :-1], 1e-300), 0.0)
    return merton_ratio(p) + d.c_exponent * p.sigma * p.gamma / (1.0 - p.gamma) \
        * np.sqrt(ratio) * strategy.grad_ratio


def mc_utility(p: ModelParams, strategy: StrategySpec, scheme: VolScheme,
               pos_map: PositivityMap, n_paths: int, grid: TimeGrid,
               master_seed: int, threads: int = 1) -> McEstimate:
    """Expected power utility (1/gamma) W_T^gamma of a strategy."""

    def batch(start, stop):
        nu, bp, z = _integrand_paths(p, scheme, grid, master_seed, start, stop, pos_map)
        pis = _strategy_paths(p, strategy, nu, z)
        w = simulate_wealth(pis, nu, grid, bp.dBs, p)
        return w[..., -1] ** p.gamma / p.gamma

    values = _map_batches(batch, n_paths, threads)
    return _reduce(values, master_seed,
                   f"utility[{strategy.kind.value},{scheme.kind.value}]")


def mc_value_rough(p: ModelParams, qm_tilde: QuantizedMeasure,
                   pos_map: PositivityMap, n_paths: int, grid: TimeGrid,
                   master_seed: int, threads: int = 1) -> McEstimate:
    """Rough-regime value (1/gamma) w0^gamma E[exp(int (gamma r + eta a(nu)) ds)]."""
    if p.rho != 0.0:
        raise ValueError("the rough value estimator is defined for rho = 0")
    if qm_tilde.kind is not MeasureKind.MU_TILDE:
        raise ValueError("mc_value_rough needs a mu_tilde-kind measure")
    eta = p.derived().eta
    h = grid.h
    wfac = p.w0 ** p.gamma / p.gamma

    def batch(start, stop):
        bp = brownian_batch(master_seed, range(start, stop), grid, p.rho)
        z = simulate_cir(p, grid, bp.dBz)
        nu = nu_quantized_rough_paths(p.v0, qm_tilde, z, grid)
        a_nu = apply_positivity(nu, pos_map)
        integral = h * np.sum(a_nu[..., :-1], axis=-1)
        return wfac * np.exp(p.gamma * p.r * grid.horizon + eta * integral)

    values = _map_batches(batch, n_paths, threads)
    return _reduce(values, master_seed, f"rough_value[{pos_map.value}]")


def fk_gradient_ratio(p: ModelParams, scheme: VolScheme, n_paths: int,
                      grid: TimeGrid, master_seed: int,
                      rel_bump: float = 1e-3, threads: int = 1) -> float:
    """g_z/g at time 0 by central finite difference of the Feynman-Kac
    estimator in z0, with common random numbers."""
    dz = max(p.z0, 1e-8) * rel_bump
    up = mc_feynman_kac(p.with_(z0=p.z0 + dz), scheme, n_paths, grid,
                        master_seed, threads)
    dn = mc_feynman_kac(p.with_(z0=max(p.z0 - dz, 0.0)), scheme, n_paths, grid,
                        master_seed, threads)
    mid = mc_feynman_kac(p, scheme, n_paths, grid, master_seed, threads)
    return (up.mean - dn.mean) / (2.0 * dz) / mid.mean


@dataclass(frozen=True)
class ConvergenceRow:
    level_atoms: int
    monotonicity_violations: int
    kernel_error: float
    riccati_value: float
    value_gap_to_next: float
    mc_mean: float
    mc_std_error: float
    epsilon: float


def convergence_study(p: ModelParams, qms: list, n_paths: int, grid: TimeGrid,
                      master_seed: int, n_monotone_paths: int = 100,
                      threads: int = 1) -> list:
    """Per-refinement-level diagnostics on shared randomness.

    For each consecutive pair of nested measures: pathwise monotonicity
    violations of the quantized volatility (expected zero), the kernel
    approximation error at t = 1, the Riccati value and its gap to the
    next level, the Monte Carlo utility of the Merton strategy, and the
    near-optimality certificate (value gap + quantized-vs-direct MC gap).
    """
    from .kernels import frac_kernel
    from .quantize import approx_kernel
    from .vol import nu_quantized_paths

    if p.regime is not Regime.FRACTIONAL:
        raise ValueError("the convergence study runs in the fractional regime")
    bp = brownian_batch(master_seed, range(n_monotone_paths), grid, p.rho)
    z = simulate_cir(p, grid, bp.dBz)
    nus = [nu_quantized_paths(p.v0, qm, z, grid) for qm in qms]
    strat = StrategySpec.merton()
    euler_util = mc_utility(p, strat, VolScheme(SchemeKind.FRACTIONAL_EULER),
                            PositivityMap.IDENTITY, n_paths, grid, master_seed,
                            threads)
    rows = []
    values = [value_function(p, solve_riccati_finite(qm, p, ode_step=grid.h)).value
              for qm in qms]
    for i, qm in enumerate(qms):
        if i + 1 < len(qms):
            violations = int(np.sum(nus[i] > nus[i + 1] + 1e-12))
            value_gap = abs(values[i] - values[i + 1])
        else:
            violations = 0
            value_gap = math.nan
        util = mc_utility(p, strat, VolScheme(SchemeKind.QUANTIZED_FRACTIONAL, qm=qm),
                          PositivityMap.IDENTITY, n_paths, grid, master_seed, threads)
        eps = (value_gap if math.isfinite(value_gap) else 0.0) \
            + abs(util.mean - euler_util.mean)
        rows.append(ConvergenceRow(
            level_atoms=qm.n_atoms,
            monotonicity_violations=violations,
            kernel_error=abs(approx_kernel(1.0, qm) - frac_kernel(1.0, p.alpha)),
            riccati_value=values[i],
            value_gap_to_next=value_gap,
            mc_mean=util.mean,
            mc_std_error=util.std_error,
            epsilon=eps,
        ))
    return rows
