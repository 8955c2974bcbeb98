#!/usr/bin/env python3
"""Paired wall-clock comparison of the monotone samplers per dimension.

Runs the exact-rejection and walk-based methods on the same benchmark
and budget for each dimension and prints timing.csv.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from rarebound.cli import run_timing


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="2,3,4,5",
                    help="comma-separated dimensions")
    ap.add_argument("--budget", type=int, default=200)
    ap.add_argument("--p", type=float, default=5e-4,
                    help="target probability of the example1 cell")
    ap.add_argument("--seed", type=int, default=20260823)
    ap.add_argument("--out", default="timing_study")
    args = ap.parse_args()

    dims = [int(v) for v in args.dims.split(",")]
    outdir = run_timing(dims, budget=args.budget, p=args.p, seed=args.seed,
                        output_dir=args.out)
    with open(os.path.join(outdir, "timing.csv"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return 0


if __name__ == "__main__":
    sys.exit(main())
