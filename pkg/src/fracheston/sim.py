"""Path simulation: RNG streams, Brownian increments and SDE schemes.

Randomness is organized as counter-based Philox streams keyed by
(master_seed, stream_id), one stream per path, so any path is bit-identical
across runs and thread schedules.  The CIR process uses full-truncation
Euler (reported values are clipped at zero); the exponential factor
processes use exact exponential integrators, which are unconditionally
stable for the stiff large-x atoms produced by quantization.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ModelParams
from .quantize import MeasureKind, QuantizedMeasure


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*h, k = 0..steps."""
    h: float
    steps: int

    def __post_init__(self):
        if self.h <= 0 or self.steps < 1:
            raise ValueError("need h > 0 and steps >= 1")

    @classmethod
    def from_horizon(cls, horizon: float, h: float) -> "TimeGrid":
        steps = round(horizon / h)
        if abs(steps * h - horizon) > 1e-12:
            raise ValueError(f"horizon {horizon} is not an integer multiple of h={h}")
        return cls(h=h, steps=steps)

    @property
    def horizon(self) -> float:
        return self.steps * self.h

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.h


@dataclass(frozen=True)
class RngSpec:
    """Key of one reproducible random stream."""
    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (int(self.master_seed) << 64) + int(self.stream_id)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class BrownianPair:
    """Per-step increments of B^Z and B^S with Corr(dBz, dBs) = rho."""
    dBz: np.ndarray
    dBs: np.ndarray


def brownian_pair(spec: RngSpec, grid: TimeGrid, rho: float) -> BrownianPair:
    gen = spec.generator()
    normals = gen.standard_normal((2, grid.steps))
    sqh = np.sqrt(grid.h)
    dBz = normals[0] * sqh
    dBs = rho * dBz + np.sqrt(1.0 - rho ** 2) * normals[1] * sqh
    return BrownianPair(dBz=dBz, dBs=dBs)


def brownian_batch(master_seed: int, stream_ids, grid: TimeGrid, rho: float) -> BrownianPair:
    """Stacked increments for a batch of path streams, shape (n_paths, steps)."""
    dBz = np.empty((len(stream_ids), grid.steps))
    dBs = np.empty_like(dBz)
    for row, sid in enumerate(stream_ids):
        bp = brownian_pair(RngSpec(master_seed, sid), grid, rho)
        dBz[row] = bp.dBz
        dBs[row] = bp.dBs
    return BrownianPair(dBz=dBz, dBs=dBs)


def _cir_like_paths(p: ModelParams, grid: TimeGrid, dBz: np.ndarray,
                    qm: QuantizedMeasure | None, drift_coef: float):
    """Full-truncation Euler for Z (or the drift-corrected Z-tilde).

    When qm is given, the fractional factor processes driven by the
    simulated path are maintained alongside and enter the drift correction
    through nu = v0 + q . Y.  With drift_coef == 0 the update is the exact
    same floating-point expression as the plain CIR scheme, so the rho = 0
    path is bit-identical to simulate_cir on shared increments.

    Returns (z_clipped, nu) where nu = v0 + q . Y along the path (None
    without qm).  Only the running factor state is kept, so large batches
    stay memory-light.  Shapes: dBz.shape[:-1] + (steps+1,).
    """
    h = grid.h
    lead = dBz.shape[:-1]
    z = np.empty(lead + (grid.steps + 1,))
    z[..., 0] = p.z0
    zk = np.full(lead, float(p.z0))
    if qm is not None:
        x = qm.nodes
        q = qm.weights
        decay = np.exp(-x * h)
        gain = (1.0 - decay) / x
        y = np.zeros(lead + (len(x),))
        nu_out = np.empty(lead + (grid.steps + 1,))
        nu_out[..., 0] = p.v0
    else:
        y = None
        nu_out = None
    sig = p.sigma
    for k in range(grid.steps):
        zp = np.maximum(zk, 0.0)
        if qm is not None:
            nu = p.v0 + y @ q
            corr = drift_coef * np.sqrt(zp * np.maximum(nu, 0.0))
        else:
            corr = 0.0
        zk = zk + (p.kappa * (p.theta - zp) + corr) * h + sig * np.sqrt(zp) * dBz[..., k]
        if qm is not None:
            y = y * decay + zp[..., None] * gain
            nu_out[..., k + 1] = p.v0 + y @ q
        z[..., k + 1] = zk
    return np.maximum(z, 0.0), nu_out


def simulate_cir(p: ModelParams, grid: TimeGrid, dBz: np.ndarray) -> np.ndarray:
    """CIR path(s) by full-truncation Euler; output is clipped at zero."""
    z, _ = _cir_like_paths(p, grid, dBz, qm=None, drift_coef=0.0)
    return z


def simulate_tilde_z(p: ModelParams, qm: QuantizedMeasure, grid: TimeGrid,
                     dBz: np.ndarray):
    """Drift-corrected CIR (the Feynman-Kac driving process).

    Returns (z, nu) where nu = v0 + q . Y is maintained concurrently from
    the factors of the simulated path.  The correction
    lam*gamma*sigma*rho/(1-gamma) * sqrt(Z * nu) vanishes at rho = 0,
    where the path coincides with simulate_cir bit for bit.
    """
    if qm.kind is not MeasureKind.MU:
        raise ValueError("simulate_tilde_z needs a fractional-kind measure")
    coef = p.lam * p.gamma * p.sigma * p.rho / (1.0 - p.gamma)
    return _cir_like_paths(p, grid, dBz, qm=qm, drift_coef=coef)


def simulate_factors(qm: QuantizedMeasure, z_path: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Exponential-integrator factors Y^x for each atom of a fractional measure.

    Y_{k+1} = exp(-x h) Y_k + Z_k (1 - exp(-x h))/x, exact for piecewise-
    constant Z.  Output shape: z_path.shape[:-1] + (steps+1, n_atoms).
    """
    if qm.kind is not MeasureKind.MU:
        raise ValueError("simulate_factors needs a fractional-kind measure")
    return _exp_integrator(qm.nodes, z_path, grid)


def _exp_integrator(x: np.ndarray, z_path: np.ndarray, grid: TimeGrid) -> np.ndarray:
    h = grid.h
    decay = np.exp(-x * h)
    gain = (1.0 - decay) / x
    lead = z_path.shape[:-1]
    out = np.zeros(lead + (grid.steps + 1, len(x)))
    y = np.zeros(lead + (len(x),))
    for k in range(grid.steps):
        y = y * decay + z_path[..., k, None] * gain
        out[..., k + 1, :] = y
    return out


def simulate_factors_rough(qm: QuantizedMeasure, z_path: np.ndarray,
                           grid: TimeGrid) -> np.ndarray:
    """Rough factors via the decomposition Y~_t = Z_t J_t - I_t.

    I_t^x = int_0^t exp(-(t-s)x) Z_s ds is the fractional factor integrator;
    J_t^x = (1 - exp(-t x))/x is deterministic.  This avoids discretizing
    the Y~ SDE directly and reuses the exact exponential update.
    """
    if qm.kind is not MeasureKind.MU_TILDE:
        raise ValueError("simulate_factors_rough needs a rough-kind measure")
    x = qm.nodes
    i_fac = _exp_integrator(x, z_path, grid)
    t = grid.times
    with np.errstate(invalid="ignore"):
        j = np.where(t[:, None] > 0, (1.0 - np.exp(-np.outer(t, x))) / x, 0.0)
    return z_path[..., None] * j - i_fac


def simulate_stock(nu_path: np.ndarray, grid: TimeGrid, dBs: np.ndarray,
                   p: ModelParams, s0: float = 100.0) -> np.ndarray:
    """Log-Euler stock path: S_{k+1} = S_k exp((r + lam*nu - nu/2) h + sqrt(nu) dBs)."""
    if np.any(nu_path < 0):
        raise ValueError("stock simulation needs a nonnegative volatility path")
    nu = nu_path[..., :-1]
    log_incr = (p.r + p.lam * nu - 0.5 * nu) * grid.h + np.sqrt(nu) * dBs
    logs = np.concatenate([np.zeros(nu.shape[:-1] + (1,)),
                           np.cumsum(log_incr, axis=-1)], axis=-1)
    return s0 * np.exp(logs)


def simulate_wealth(pi, nu_path: np.ndarray, grid: TimeGrid, dBs: np.ndarray,
                    p: ModelParams) -> np.ndarray:
    """Wealth path under a strategy, in log space (exact lognormal solution
    with left-endpoint quadrature of the drift integral).

    pi may be a scalar, an array of per-step fractions, or a callable
    pi(t_k, nu_k) evaluated at the left endpoint of each step.
    """
    if np.any(nu_path < 0):
        raise ValueError("wealth simulation needs a nonnegative volatility path")
    nu = nu_path[..., :-1]
    if callable(pi):
        t = grid.times[:-1]
        pis = np.array([pi(t[k], nu[..., k]) for k in range(grid.steps)])
        pis = np.moveaxis(pis, 0, -1)
    else:
        pis = np.broadcast_to(np.asarray(pi, dtype=float), nu.shape)
    log_incr = (p.r + pis * nu * (p.lam - 0.5 * pis)) * grid.h + pis * np.sqrt(nu) * dBs
    logs = np.concatenate([np.zeros(nu.shape[:-1] + (1,)),
                           np.cumsum(log_incr, axis=-1)], axis=-1)
    return p.w0 * np.exp(logs)


def optimal_wealth_closed_form(nu_path: np.ndarray, grid: TimeGrid,
                               dBs: np.ndarray, p: ModelParams) -> np.ndarray:
    """Closed-form optimal wealth under the Merton fraction lam/(1-gamma).

    W_t = w0 exp(r t + int (lam^2/(1-gamma) - lam^2/(2(1-gamma)^2)) nu ds
                 + int lam/(1-gamma) sqrt(nu) dBs),
    with left-endpoint quadrature on the same grid and increments.
    """
    m = p.lam / (1.0 - p.gamma)
    nu = nu_path[..., :-1]
    drift = p.r + (p.lam ** 2 / (1.0 - p.gamma)
                   - 0.5 * p.lam ** 2 / (1.0 - p.gamma) ** 2) * nu
    log_incr = drift * grid.h + m * np.sqrt(nu) * dBs
    logs = np.concatenate([np.zeros(nu.shape[:-1] + (1,)),
                           np.cumsum(log_incr, axis=-1)], axis=-1)
    return p.w0 * np.exp(logs)


def sample_cir_exact(p: ModelParams, t: float, n: int,
                     gen: np.random.Generator) -> np.ndarray:
    """Exact CIR marginal via the noncentral chi-square transition.

    Validation oracle for the Euler scheme; not used by the simulators.
    """
    c = p.sigma ** 2 * (1.0 - np.exp(-p.kappa * t)) / (4.0 * p.kappa)
    df = 4.0 * p.kappa * p.theta / p.sigma ** 2
    nc = p.z0 * np.exp(-p.kappa * t) / c
    return c * gen.noncentral_chisquare(df, nc, size=n)


@dataclass
class PathBundle:
    """One path's time-gridded sample: Z, factors, nu, stock, wealth."""
    grid: TimeGrid
    z: np.ndarray
    nu: np.ndarray
    s: np.ndarray | None = None
    w: np.ndarray | None = None
    y_factors: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def to_csv(self, path, include_factors: bool = False) -> None:
        import csv
        cols = ["t", "Z", "nu"]
        data = [self.grid.times, self.z, self.nu]
        if self.s is not None:
            cols.append("S")
            data.append(self.s)
        if self.w is not None:
            cols.append("W")
            data.append(self.w)
        if include_factors and self.y_factors is not None:
            for i in range(self.y_factors.shape[-1]):
                cols.append(f"Y{i}")
                data.append(self.y_factors[..., i])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for k in range(self.grid.steps + 1):
                w.writerow([f"{col[k]:.17g}" for col in data])
