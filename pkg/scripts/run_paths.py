"""Sample volatility and stock paths across the alpha/rho grid.

Thin wrapper over the `simulate` subcommand: builds a scenario file from
the flags below and drops the path CSVs plus positivity-map diagnostics
into the output directory.

    python scripts/run_paths.py --out out/paths --n-sample-paths 10
"""
import argparse
import json
import sys
import tempfile

from fracheston.cli import main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/paths")
    ap.add_argument("--seed", type=int, default=20240801)
    ap.add_argument("--step", type=float, default=0.001)
    ap.add_argument("--n-sample-paths", type=int, default=5)
    ap.add_argument("--alphas", type=float, nargs="+",
                    default=[0.05, 0.5, 0.95, -0.55, -0.75, -0.95])
    ap.add_argument("--rhos", type=float, nargs="+", default=[-0.7, 0.0, 0.7])
    args = ap.parse_args(argv)

    scenario = {"alphas": args.alphas, "rhos": args.rhos, "step": args.step,
                "n_sample_paths": args.n_sample_paths, "seed": args.seed}
    with tempfile.NamedTemporaryFile("w", suffix=".json") as fh:
        json.dump(scenario, fh)
        fh.flush()
        return main(["--config", fh.name, "--out", args.out, "simulate"])


if __name__ == "__main__":
    sys.exit(run())
