"""Command-line scenario runner.

Subcommands write CSV reports into the output directory, plus a
manifest.csv listing every emitted file with the configuration hash.
All numbers are printed with 17 significant digits, so re-running a
command with the same seed and config reproduces the files byte for
byte, independent of --threads.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, load_config
from .mc import (_map_batches, convergence_study, mc_feynman_kac,
                 mc_value_rough)
from .params import ModelParams, Regime, merton_ratio
from .quantize import MeasureKind, dyadic_chain, measure_for_atoms
from .riccati import (RiccatiBlowUp, solve_riccati_finite, solve_riccati_limit,
                      solve_riccati_rough, value_function)
from .sim import TimeGrid, brownian_batch, simulate_cir, simulate_stock, simulate_wealth
from .vol import PositivityMap, SchemeKind, VolScheme, apply_positivity

FMT = "%.17g"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FMT % v


def _write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(out_dir: Path, files: list, cfg: ScenarioConfig) -> None:
    h = cfg.config_hash()
    _write_csv(out_dir / "manifest.csv", ["file", "config_hash"],
               [(f, h) for f in sorted(files)])


def _tag(x: float) -> str:
    return ("%g" % x).replace("-", "m")


def _scheme_for(p: ModelParams, cfg: ScenarioConfig) -> VolScheme:
    if p.regime is Regime.CLASSICAL_HESTON:
        return VolScheme(SchemeKind.CLASSICAL)
    if p.regime is Regime.FRACTIONAL:
        return VolScheme(SchemeKind.FRACTIONAL_EULER)
    return VolScheme(SchemeKind.ROUGH_MARCHAUD, delta=cfg.delta)


def _stock_map(p: ModelParams, cfg: ScenarioConfig) -> PositivityMap:
    if p.regime is Regime.ROUGH:
        return PositivityMap(cfg.positivity_map)
    return PositivityMap.IDENTITY


def cmd_simulate(cfg: ScenarioConfig, out_dir: Path) -> list:
    """Sample paths of Z, nu and S per (alpha, rho) cell, plus positivity
    diagnostics for rough alphas."""
    grid = TimeGrid.from_horizon(cfg.horizon, cfg.step)
    files = []
    diag_rows = []
    npaths = cfg.n_sample_paths
    for alpha in cfg.alphas:
        for rho in cfg.rhos:
            p = cfg.model_params(alpha, rho)
            bp = brownian_batch(cfg.seed, range(npaths), grid, rho)
            z = simulate_cir(p, grid, bp.dBz)
            nu = _scheme_for(p, cfg).nu_paths(p, z, grid)
            s = simulate_stock(apply_positivity(nu, _stock_map(p, cfg)),
                               grid, bp.dBs, p, s0=cfg.s0)
            header = ["t"]
            cols = [grid.times]
            for i in range(npaths):
                header += [f"z{i}", f"nu{i}", f"s{i}"]
                cols += [z[i], nu[i], s[i]]
            name = f"paths_a{_tag(alpha)}_r{_tag(rho)}.csv"
            _write_csv(out_dir / name, header, zip(*cols))
            files.append(name)
            if p.regime is Regime.ROUGH:
                for i in range(npaths):
                    diag_rows.append((alpha, rho, i,
                                      float(np.mean(nu[i] < 0.0))))
        p0 = cfg.model_params(alpha, 0.0)
        if p0.regime is Regime.ROUGH:
            bp = brownian_batch(cfg.seed, range(1), grid, 0.0)
            z = simulate_cir(p0, grid, bp.dBz)
            nu = _scheme_for(p0, cfg).nu_paths(p0, z, grid)[0]
            name = f"posmap_a{_tag(alpha)}.csv"
            _write_csv(out_dir / name, ["t", "nu_raw", "nu_abs", "nu_exp"],
                       zip(grid.times, nu, np.abs(nu), np.exp(nu)))
            files.append(name)
    if diag_rows:
        _write_csv(out_dir / "rough_diagnostics.csv",
                   ["alpha", "rho", "path", "negative_fraction"], diag_rows)
        files.append("rough_diagnostics.csv")
    return files


def cmd_quantize(cfg: ScenarioConfig, out_dir: Path) -> list:
    """Quantized measures (atoms and weights) per alpha and refinement level."""
    files = []
    for alpha in cfg.alphas:
        p = cfg.model_params(alpha, 0.0)
        if p.regime is Regime.CLASSICAL_HESTON:
            continue
        kind = MeasureKind.MU if p.regime is Regime.FRACTIONAL else MeasureKind.MU_TILDE
        for n in cfg.levels:
            qm = measure_for_atoms(n, alpha, kind)
            name = f"quantized_a{_tag(alpha)}_n{qm.n_atoms}.csv"
            qm.to_csv(out_dir / name)
            files.append(name)
    return files


def _terminal_wealth(p: ModelParams, cfg: ScenarioConfig, grid: TimeGrid,
                     threads: int) -> np.ndarray:
    scheme = _scheme_for(p, cfg)
    pmap = _stock_map(p, cfg)
    pi_star = merton_ratio(p)

    def batch(start, stop):
        bp = brownian_batch(cfg.seed, range(start, stop), grid, p.rho)
        z = simulate_cir(p, grid, bp.dBz)
        nu = apply_positivity(scheme.nu_paths(p, z, grid), pmap)
        return simulate_wealth(pi_star, nu, grid, bp.dBs, p)[..., -1]

    return _map_batches(batch, cfg.n_paths, threads)


def cmd_value(cfg: ScenarioConfig, out_dir: Path, threads: int,
              errors: list) -> list:
    """Affine (Riccati) value vs Monte Carlo value per alpha at rho = 0."""
    grid = TimeGrid.from_horizon(cfg.horizon, cfg.step)
    rows = []
    for alpha in cfg.alphas:
        p = cfg.model_params(alpha, 0.0)
        wfac = p.w0 ** p.gamma / p.gamma
        for level in cfg.levels:
            try:
                if p.regime is Regime.FRACTIONAL:
                    qm = measure_for_atoms(level, alpha, MeasureKind.MU)
                    sol = solve_riccati_finite(qm, p, ode_step=cfg.step)
                    est = mc_feynman_kac(
                        p, VolScheme(SchemeKind.QUANTIZED_FRACTIONAL, qm=qm),
                        cfg.n_paths, grid, cfg.seed, threads)
                elif p.regime is Regime.ROUGH:
                    qm = measure_for_atoms(level, alpha, MeasureKind.MU_TILDE)
                    sol = solve_riccati_rough(qm, p, ode_step=cfg.step)
                    # the rough estimator already carries the wealth factor
                    est = mc_value_rough(p, qm, PositivityMap(cfg.positivity_map),
                                         cfg.n_paths, grid, cfg.seed, threads)
                else:
                    sol = solve_riccati_limit(p, ode_step=cfg.step, alpha=0.0)
                    est = mc_feynman_kac(p, VolScheme(SchemeKind.CLASSICAL),
                                         cfg.n_paths, grid, cfg.seed, threads)
                rv = value_function(p, sol).value
                if p.regime is Regime.ROUGH:
                    mc_val, se = est.mean, est.std_error
                else:
                    mc_val = wfac * est.mean
                    se = abs(wfac) * est.std_error
                rows.append((p.regime.value, alpha, level, rv, mc_val, se,
                             rv - mc_val, 0))
            except RiccatiBlowUp:
                rows.append((p.regime.value, alpha, level, math.nan, math.nan,
                             math.nan, math.nan, 1))
            except Exception as exc:  # noqa: BLE001 - per-row failure report
                errors.append(f"value row alpha={alpha} level={level}: {exc}")
            if p.regime is Regime.CLASSICAL_HESTON:
                break  # levels are irrelevant without a quantized measure
    _write_csv(out_dir / "value.csv",
               ["regime", "alpha", "level", "riccati_value", "mc_value",
                "se", "gap", "blow_up"], rows)
    return ["value.csv"]


def cmd_wealth(cfg: ScenarioConfig, out_dir: Path, threads: int) -> list:
    """Optimal-wealth sample paths and terminal-wealth statistics per alpha."""
    grid = TimeGrid.from_horizon(cfg.horizon, cfg.step)
    files = []
    summary = []
    for alpha in (0.0, 0.5, 0.95, -0.75, -0.55):
        p = cfg.model_params(alpha, 0.0)
        pi_star = merton_ratio(p)
        bp = brownian_batch(cfg.seed, range(cfg.n_sample_paths), grid, 0.0)
        z = simulate_cir(p, grid, bp.dBz)
        nu = apply_positivity(_scheme_for(p, cfg).nu_paths(p, z, grid),
                              _stock_map(p, cfg))
        w = simulate_wealth(pi_star, nu, grid, bp.dBs, p)
        header = ["t", "pi_star"] + [f"w{i}" for i in range(cfg.n_sample_paths)]
        cols = [grid.times, np.full(grid.steps + 1, pi_star)] + list(w)
        name = f"wealth_a{_tag(alpha)}.csv"
        _write_csv(out_dir / name, header, zip(*cols))
        files.append(name)
        wt = _terminal_wealth(p, cfg, grid, threads)
        summary.append((p.regime.value, alpha, pi_star, p.w0,
                        math.fsum(wt) / len(wt),
                        float(np.var(wt, ddof=1)), len(wt)))
    _write_csv(out_dir / "wealth_summary.csv",
               ["regime", "alpha", "pi_star", "w0", "mean_terminal",
                "var_terminal", "n_paths"], summary)
    files.append("wealth_summary.csv")
    return files


def cmd_longterm(cfg: ScenarioConfig, out_dir: Path, threads: int) -> list:
    """Terminal nu and S quantiles for a long horizon, fractional vs rough."""
    horizon = cfg.horizon if cfg.horizon != 1.0 else 10.0
    grid = TimeGrid.from_horizon(horizon, cfg.step)
    qs = (0.05, 0.25, 0.5, 0.75, 0.95)
    rows = []
    for alpha in (0.75, -0.75):
        p = cfg.model_params(alpha, 0.0).with_(horizon=horizon)
        scheme = _scheme_for(p, cfg)
        pmap = _stock_map(p, cfg)

        def batch(start, stop, p=p, scheme=scheme, pmap=pmap):
            bp = brownian_batch(cfg.seed, range(start, stop), grid, 0.0)
            z = simulate_cir(p, grid, bp.dBz)
            nu = apply_positivity(scheme.nu_paths(p, z, grid), pmap)
            s = simulate_stock(nu, grid, bp.dBs, p, s0=cfg.s0)
            return np.stack([nu[..., -1], s[..., -1]], axis=-1)

        term = _map_batches(batch, cfg.n_paths, threads)
        for q in qs:
            rows.append((p.regime.value, alpha, horizon, q,
                         float(np.quantile(term[:, 0], q)),
                         float(np.quantile(term[:, 1], q))))
    _write_csv(out_dir / "longterm.csv",
               ["regime", "alpha", "horizon", "quantile", "nu_T", "s_T"], rows)
    return ["longterm.csv"]


def cmd_converge(cfg: ScenarioConfig, out_dir: Path, threads: int) -> list:
    """Refinement-level convergence report in the fractional regime."""
    alpha = next((a for a in cfg.alphas
                  if cfg.model_params(a, 0.0).regime is Regime.FRACTIONAL), 0.75)
    p = cfg.model_params(alpha, 0.0)
    grid = TimeGrid.from_horizon(cfg.horizon, cfg.step)
    base = measure_for_atoms(cfg.levels[0], alpha, MeasureKind.MU)
    qms = dyadic_chain(base.n_atoms, alpha, MeasureKind.MU, len(cfg.levels))
    rows = convergence_study(p, qms, cfg.n_paths, grid, cfg.seed,
                             threads=threads)
    _write_csv(out_dir / "converge.csv",
               ["atoms", "monotonicity_violations", "kernel_error",
                "riccati_value", "value_gap_to_next", "mc_mean",
                "mc_std_error", "epsilon"],
               [(r.level_atoms, r.monotonicity_violations, r.kernel_error,
                 r.riccati_value, r.value_gap_to_next, r.mc_mean,
                 r.mc_std_error, r.epsilon) for r in rows])
    return ["converge.csv"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fracheston",
        description="Portfolio optimization in fractional and rough Heston "
                    "models: simulation, quantization, affine values, and "
                    "Monte Carlo cross-validation, reported as CSV.")
    ap.add_argument("--config", type=str, default=None,
                    help="JSON scenario config (versioned schema)")
    ap.add_argument("--seed", type=int, default=None, help="master RNG seed")
    ap.add_argument("--out", type=str, default=None, help="output directory")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads for Monte Carlo batches")
    ap.add_argument("--paths", type=int, default=None, help="Monte Carlo paths")
    ap.add_argument("--step", type=float, default=None, help="time step h")
    ap.add_argument("command",
                    choices=["simulate", "quantize", "value", "wealth",
                             "longterm", "converge"])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ScenarioConfig()
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.paths is not None:
            overrides["n_paths"] = args.paths
        if args.step is not None:
            overrides["step"] = args.step
        if overrides:
            cfg = cfg.with_(**overrides)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    errors: list = []
    try:
        if args.command == "simulate":
            files = cmd_simulate(cfg, out_dir)
        elif args.command == "quantize":
            files = cmd_quantize(cfg, out_dir)
        elif args.command == "value":
            files = cmd_value(cfg, out_dir, cfg.threads, errors)
        elif args.command == "wealth":
            files = cmd_wealth(cfg, out_dir, cfg.threads)
        elif args.command == "longterm":
            files = cmd_longterm(cfg, out_dir, cfg.threads)
        else:
            files = cmd_converge(cfg, out_dir, cfg.threads)
    except OSError as exc:
        print(f"i/o error ({args.command}): {exc}", file=sys.stderr)
        return 1
    _write_manifest(out_dir, files, cfg)
    for msg in errors:
        print(f"row failed: {msg}", file=sys.stderr)
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main())
