"""Riccati ODE solvers and affine value-function assembly.

The exponent of the power-utility value function splits into closed-form
psi coefficients (one per quantization atom), a scalar Riccati solution
varphi and a plainly integrated Phi.  Three forcing variants are covered:
finite-atom fractional, the fractional limit (power-law forcing, reducing
to classical Heston at alpha = 0) and the rough finite-atom system whose
forcing carries an integrable power singularity at the terminal tau.

All solvers run classical RK4 in tau = T - t, detect blow-up of varphi
(the affine ansatz may only exist up to a finite horizon) and return an
immutable solution object on a tau grid.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .params import ModelParams, Regime, gamma_fn, merton_ratio
from .quantize import MeasureKind, QuantizedMeasure

BLOW_UP_THRESHOLD = 1e6


class RiccatiBlowUp(RuntimeError):
    """Raised when the value function is requested past the blow-up horizon."""


@dataclass(frozen=True)
class RiccatiSolution:
    """varphi and Phi on a tau grid, with optional blow-up marker."""
    tau_grid: np.ndarray
    varphi: np.ndarray
    phi_big: np.ndarray
    regime: Regime
    qm: QuantizedMeasure | None = None
    blow_up: float | None = None

    @property
    def horizon(self) -> float:
        return float(self.tau_grid[-1])

    def at(self, tau: float) -> tuple:
        """(varphi, Phi) at tau by linear interpolation on the stored grid."""
        if self.blow_up is not None and tau > self.horizon:
            raise RiccatiBlowUp(f"solution blew up at tau={self.blow_up:.6g} < {tau:.6g}")
        if tau < 0 or tau > self.horizon + 1e-12:
            raise ValueError(f"tau={tau} outside the solved range [0, {self.horizon}]")
        return (float(np.interp(tau, self.tau_grid, self.varphi)),
                float(np.interp(tau, self.tau_grid, self.phi_big)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "varphi", "phi_big"])
            for tau, vp, pb in zip(self.tau_grid, self.varphi, self.phi_big):
                w.writerow([f"{tau:.17g}", f"{vp:.17g}", f"{pb:.17g}"])


def psi(tau: float, q: float, x: float, eta: float) -> float:
    """Closed-form atom coefficient: eta * q * (1 - exp(-x tau)) / x."""
    if x <= 0:
        raise ValueError("atom location must be positive")
    return eta * q * (1.0 - math.exp(-x * tau)) / x


def psi_vector(tau: float, qm: QuantizedMeasure, eta: float) -> np.ndarray:
    return eta * qm.weights * (1.0 - np.exp(-qm.nodes * tau)) / qm.nodes


def _rk4_system(forcing, p: ModelParams, horizon: float, ode_step: float,
                extra_phi_big=None, tau_nodes: np.ndarray | None = None):
    """Integrate varphi' = forcing(tau) - kappa*varphi + sigma^2/2 * varphi^2
    and Phi' = gamma r + v0 eta + kappa theta (varphi + extra(tau)).

    Returns (tau, varphi, Phi, blow_up).  Either a uniform step or explicit
    tau_nodes may be supplied.
    """
    eta = p.derived().eta
    kap, sig2 = p.kappa, p.sigma ** 2

    def dvarphi(tau, v):
        return forcing(tau) - kap * v + 0.5 * sig2 * v * v

    def dphi_big(tau, v):
        extra = extra_phi_big(tau) if extra_phi_big is not None else 0.0
        return p.gamma * p.r + p.v0 * eta + kap * p.theta * (v + extra)

    if tau_nodes is None:
        n = max(1, round(horizon / ode_step))
        tau_nodes = np.linspace(0.0, horizon, n + 1)
    taus = [0.0]
    vs = [0.0]
    pbs = [0.0]
    v, pb = 0.0, 0.0
    blow_up = None
    for i in range(len(tau_nodes) - 1):
        t0, t1 = tau_nodes[i], tau_nodes[i + 1]
        dt = t1 - t0
        k1v = dvarphi(t0, v)
        k1p = dphi_big(t0, v)
        k2v = dvarphi(t0 + dt / 2, v + dt / 2 * k1v)
        k2p = dphi_big(t0 + dt / 2, v + dt / 2 * k1v)
        k3v = dvarphi(t0 + dt / 2, v + dt / 2 * k2v)
        k3p = dphi_big(t0 + dt / 2, v + dt / 2 * k2v)
        k4v = dvarphi(t1, v + dt * k3v)
        k4p = dphi_big(t1, v + dt * k3v)
        v = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        pb = pb + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        if not np.isfinite(v) or abs(v) > BLOW_UP_THRESHOLD:
            blow_up = float(t1)
            break
        taus.append(float(t1))
        vs.append(float(v))
        pbs.append(float(pb))
    return np.array(taus), np.array(vs), np.array(pbs), blow_up


def solve_riccati_finite(qm: QuantizedMeasure, p: ModelParams,
                         horizon: float | None = None,
                         ode_step: float = 1e-3) -> RiccatiSolution:
    """Finite-atom fractional system: forcing eta * sum_i q_i (1-exp(-x_i tau))/x_i."""
    if qm.kind is not MeasureKind.MU:
        raise ValueError("finite fractional Riccati needs a mu-kind measure")
    horizon = p.horizon if horizon is None else horizon
    eta = p.derived().eta
    x, q = qm.nodes, qm.weights

    def forcing(tau):
        return eta * float(np.dot(q, (1.0 - np.exp(-x * tau)) / x))

    tau, v, pb, blow = _rk4_system(forcing, p, horizon, ode_step)
    return RiccatiSolution(tau_grid=tau, varphi=v, phi_big=pb,
                           regime=Regime.FRACTIONAL, qm=qm, blow_up=blow)


def solve_riccati_limit(p: ModelParams, horizon: float | None = None,
                        ode_step: float = 1e-3,
                        alpha: float | None = None) -> RiccatiSolution:
    """Limiting fractional system: forcing eta * tau^alpha / Gamma(alpha+1).

    alpha = 0 gives the constant-forcing classical-Heston system.
    """
    alpha = p.alpha if alpha is None else alpha
    if not (0.0 <= alpha < 1.0):
        raise ValueError("limit Riccati requires alpha in [0, 1)")
    horizon = p.horizon if horizon is None else horizon
    eta = p.derived().eta
    ga1 = gamma_fn(alpha + 1.0)

    def forcing(tau):
        if alpha == 0.0:
            return eta
        return eta * tau ** alpha / ga1 if tau > 0 else 0.0

    tau, v, pb, blow = _rk4_system(forcing, p, horizon, ode_step)
    regime = Regime.CLASSICAL_HESTON if alpha == 0.0 else Regime.FRACTIONAL
    return RiccatiSolution(tau_grid=tau, varphi=v, phi_big=pb,
                           regime=regime, blow_up=blow)


def h_closed_form(t: float, horizon: float, qm: QuantizedMeasure) -> float:
    """h^n(t) = sum_i q~_i (1 - e^{-x_i t})(1 - e^{-x_i (T-t)}) / x_i^2.

    Closed form of the triple integral of e^{-x(s+u)} over
    [0,t] x [0,T-t] against mu~^n; vanishes at t = 0 and t = T.
    """
    x, q = qm.nodes, qm.weights
    return float(np.dot(q, (1.0 - np.exp(-x * t)) * (1.0 - np.exp(-x * (horizon - t)))
                        / x ** 2))


def _rough_tau_nodes(horizon: float, ode_step: float,
                     graded_substeps: int = 200) -> np.ndarray:
    """Uniform tau nodes away from the singularity, quadratically graded
    nodes clustering at tau = T (where t = T - tau hits the t^(-alpha-1)
    singularity)."""
    t_sing = min(10.0 * ode_step, horizon / 2.0)
    n_uni = max(1, round((horizon - t_sing) / ode_step))
    uniform = np.linspace(0.0, horizon - t_sing, n_uni + 1)
    j = np.arange(graded_substeps, -1, -1)
    graded = horizon - t_sing * (j / graded_substeps) ** 2
    return np.concatenate([uniform, graded[1:]])


def solve_riccati_rough(qm_tilde: QuantizedMeasure, p: ModelParams,
                        horizon: float | None = None,
                        ode_step: float = 1e-3,
                        graded_substeps: int = 200) -> RiccatiSolution:
    """Rough finite-atom system in tau = T - t.

    varphi'(tau) = eta (T-tau)^(-alpha-1)/Gamma(-alpha) - kappa varphi
                   + sigma^2/2 varphi^2
                   - eta h(T-tau) (kappa - sigma^2 varphi - sigma^2 eta h(T-tau)/2),
    Phi'(tau)    = gamma r + v0 eta + kappa theta (varphi + eta h(T-tau)).

    The singular additive forcing is integrated exactly (its antiderivative
    is eta ((T-tau)^(-alpha) - T^(-alpha)) / (alpha Gamma(-alpha))) and the
    smooth remainder solved by RK4 on a mesh graded into tau = T.
    """
    if qm_tilde.kind is not MeasureKind.MU_TILDE:
        raise ValueError("rough Riccati needs a mu_tilde-kind measure")
    alpha = qm_tilde.alpha
    if p.regime is not Regime.ROUGH or p.alpha != alpha:
        raise ValueError("params alpha must match the rough measure alpha")
    horizon = p.horizon if horizon is None else horizon
    eta = p.derived().eta
    kap, sig2 = p.kappa, p.sigma ** 2
    gna = gamma_fn(-alpha)

    def psing(tau):
        # antiderivative of eta (T-u)^(-alpha-1)/Gamma(-alpha), zero at tau=0
        return eta * ((horizon - tau) ** (-alpha) - horizon ** (-alpha)) / (alpha * gna)

    def h_of_tau(tau):
        return h_closed_form(horizon - tau, horizon, qm_tilde)

    def dsmooth(tau, vs):
        v = vs + psing(tau)
        hn = h_of_tau(tau)
        return (-kap * v + 0.5 * sig2 * v * v
                - eta * hn * (kap - sig2 * v - 0.5 * sig2 * eta * hn))

    def dphi_big(tau, vs):
        # the y-coefficients sum to eta*h(t), so h enters scaled by eta
        return (p.gamma * p.r + p.v0 * eta
                + kap * p.theta * (vs + psing(tau) + eta * h_of_tau(tau)))

    nodes = _rough_tau_nodes(horizon, ode_step, graded_substeps)
    taus = [0.0]
    vs_list = [0.0]
    pbs = [0.0]
    vs, pb = 0.0, 0.0
    blow = None
    for i in range(len(nodes) - 1):
        t0, t1 = nodes[i], nodes[i + 1]
        dt = t1 - t0
        k1v = dsmooth(t0, vs)
        k1p = dphi_big(t0, vs)
        k2v = dsmooth(t0 + dt / 2, vs + dt / 2 * k1v)
        k2p = dphi_big(t0 + dt / 2, vs + dt / 2 * k1v)
        k3v = dsmooth(t0 + dt / 2, vs + dt / 2 * k2v)
        k3p = dphi_big(t0 + dt / 2, vs + dt / 2 * k2v)
        k4v = dsmooth(t1, vs + dt * k3v)
        k4p = dphi_big(t1, vs + dt * k3v)
        vs = vs + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        pb = pb + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        v_full = vs + psing(t1)
        if not np.isfinite(v_full) or abs(v_full) > BLOW_UP_THRESHOLD:
            blow = float(t1)
            break
        taus.append(float(t1))
        vs_list.append(float(v_full))
        pbs.append(float(pb))
    return RiccatiSolution(tau_grid=np.array(taus), varphi=np.array(vs_list),
                           phi_big=np.array(pbs), regime=Regime.ROUGH,
                           qm=qm_tilde, blow_up=blow)


@dataclass(frozen=True)
class AffineValue:
    """Value and the additive pieces of its exponent."""
    value: float
    wealth_factor: float       # w^gamma / gamma
    exponent_phi_big: float
    exponent_phi_z: float
    exponent_psi_y: float = 0.0
    exponent_history: float = 0.0

    def reassemble(self) -> float:
        return self.wealth_factor * math.exp(self.exponent_phi_big
                                             + self.exponent_phi_z
                                             + self.exponent_psi_y
                                             + self.exponent_history)


def value_function(p: ModelParams, sol: RiccatiSolution, w: float | None = None,
                   z: float | None = None) -> AffineValue:
    """Time-0 value (w^gamma/gamma) exp(Phi(T) + varphi(T) z0)."""
    w = p.w0 if w is None else w
    z = p.z0 if z is None else z
    if sol.blow_up is not None and sol.horizon < p.horizon:
        raise RiccatiBlowUp(f"no finite value: varphi blew up at tau={sol.blow_up:.6g}")
    vp, pb = sol.at(p.horizon)
    return AffineValue(value=(w ** p.gamma / p.gamma) * math.exp(pb + vp * z),
                       wealth_factor=w ** p.gamma / p.gamma,
                       exponent_phi_big=pb, exponent_phi_z=vp * z)


def value_function_at_t(p: ModelParams, sol: RiccatiSolution, qm: QuantizedMeasure,
                        t: float, w: float, y: np.ndarray, z: float) -> AffineValue:
    """Time-t value with factor states: (w^g/g) exp(Phi + sum psi_i y_i + varphi z)."""
    tau = p.horizon - t
    if tau < 0:
        raise ValueError("t beyond the horizon")
    vp, pb = sol.at(tau)
    eta = p.derived().eta
    psis = psi_vector(tau, qm, eta)
    return AffineValue(value=(w ** p.gamma / p.gamma)
                       * math.exp(pb + float(np.dot(psis, y)) + vp * z),
                       wealth_factor=w ** p.gamma / p.gamma,
                       exponent_phi_big=pb, exponent_phi_z=vp * z,
                       exponent_psi_y=float(np.dot(psis, y)))


def history_term(z_history: np.ndarray, t: float, horizon: float, alpha: float,
                 eta: float, method: str = "closed_form") -> float:
    """Exponent contribution of a realized Z history on [0, t].

    Closed form of the inner x-integral gives
        eta * int_0^t Z_u ((T-u)^alpha - (t-u)^alpha) / Gamma(alpha+1) du,
    evaluated by trapezoid on the history grid.  method="quadrature" keeps
    the double-integral form as an independent oracle.
    """
    if t >= horizon:
        raise ValueError("history term requires t < horizon")
    if not (0.0 < alpha < 1.0):
        raise ValueError("history term is fractional-regime only")
    z_history = np.asarray(z_history, dtype=float)
    u = np.linspace(0.0, t, len(z_history))
    if method == "closed_form":
        inner = ((horizon - u) ** alpha - (t - u) ** alpha) / gamma_fn(alpha + 1.0)
    elif method == "quadrature":
        from scipy.integrate import quad
        spa = math.sin(math.pi * alpha) / math.pi
        inner = np.empty_like(u)
        for i, ui in enumerate(u):
            a, b = t - ui, horizon - ui
            val, _ = quad(lambda x: (np.exp(-a * x) - np.exp(-b * x)) / x
                          * spa * x ** (-alpha), 0.0, np.inf, limit=200)
            inner[i] = val
    else:
        raise ValueError(f"unknown method {method!r}")
    return eta * float(np.trapezoid(z_history * inner, u))


def optimal_strategy(p: ModelParams, z: float | None = None,
                     nu: float | None = None,
                     grad_ratio: float | None = None) -> float:
    """Optimal risky fraction.

    rho = 0: the constant Merton fraction lam/(1-gamma), independent of the
    state.  rho != 0: Merton fraction plus the correlation correction
    c sigma gamma/(1-gamma) sqrt(z/nu) * (g_z/g), with the gradient ratio
    estimated externally (e.g. mc.fk_gradient_ratio).
    """
    base = merton_ratio(p)
    if p.rho == 0.0:
        return base
    if grad_ratio is None or z is None or nu is None:
        raise ValueError("rho != 0 needs z, nu and a g_z/g estimate")
    d = p.derived()
    return base + d.c_exponent * p.sigma * p.gamma / (1.0 - p.gamma) \
        * math.sqrt(z / nu) * grad_ratio


def epsilon_diagnostic(level: int, p: ModelParams, mc_budget: int,
                       grid, master_seed: int = 20240801) -> float:
    """Certificate for the near-optimality of the level-n strategy.

    Sum of (a) the Riccati value gap between the level and the next dyadic
    refinement and (b) the common-random-number gap between the Monte Carlo
    utility of the Merton strategy under the quantized volatility and under
    the direct fractional Euler volatility.
    """
    from . import mc
    from .quantize import measure_for_atoms
    from .vol import SchemeKind, VolScheme, PositivityMap

    qm = measure_for_atoms(level, p.alpha, MeasureKind.MU)
    qm2 = qm.refined()
    v1 = value_function(p, solve_riccati_finite(qm, p)).value
    v2 = value_function(p, solve_riccati_finite(qm2, p)).value
    gap_value = abs(v1 - v2)
    strat = mc.StrategySpec.merton()
    u_quant = mc.mc_utility(p, strat, VolScheme(SchemeKind.QUANTIZED_FRACTIONAL, qm=qm),
                            PositivityMap.IDENTITY, mc_budget, grid, master_seed)
    u_euler = mc.mc_utility(p, strat, VolScheme(SchemeKind.FRACTIONAL_EULER),
                            PositivityMap.IDENTITY, mc_budget, grid, master_seed)
    return gap_value + abs(u_quant.mean - u_euler.mean)
