"""Quantization-level convergence of the value function.

Runs the `converge` and `value` subcommands on a dyadic chain of
quantized measures and prints the resulting tables, so the decay of the
kernel error and of the level-to-level value gaps can be eyeballed.
"""
import argparse
import json
import pathlib
import sys
import tempfile

from fracheston.cli import main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/converge")
    ap.add_argument("--alpha", type=float, default=0.75)
    ap.add_argument("--levels", type=int, nargs="+",
                    default=[64, 128, 256, 512])
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--step", type=float, default=0.005)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args(argv)

    scenario = {"alphas": [args.alpha, -0.75], "levels": args.levels,
                "step": args.step, "n_paths": args.paths}
    with tempfile.NamedTemporaryFile("w", suffix=".json") as fh:
        json.dump(scenario, fh)
        fh.flush()
        base = ["--config", fh.name, "--out", args.out,
                "--threads", str(args.threads)]
        rc = main(base + ["converge"]) or main(base + ["value"])
    for name in ("converge.csv", "value.csv"):
        print(f"--- {name} ---")
        print(pathlib.Path(args.out, name).read_text())
    return rc


if __name__ == "__main__":
    sys.exit(run())
