#!/usr/bin/env python3
"""Tabulate the risk level lambda(n, p) and its crossings with p.

Writes lambda_table.csv and lambda_crossings.csv (and SVG curves when
matplotlib is available) for a list of target probabilities.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from rarebound.cli import run_lambda_table
from rarebound.surrogate import DEFAULT_BERNSTEIN_C


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", default="1e-1,1e-2,1e-3",
                    help="comma-separated target probabilities")
    ap.add_argument("--n-min", type=int, default=1)
    ap.add_argument("--n-max", type=int, default=1_000_000)
    ap.add_argument("--points", type=int, default=200,
                    help="grid points on the log(n) axis")
    ap.add_argument("--c", type=float, default=DEFAULT_BERNSTEIN_C,
                    help="Bernstein constant in lambda(n, p)")
    ap.add_argument("--out", default="lambda_figures")
    ap.add_argument("--no-plots", action="store_true",
                    help="write only the CSV tables")
    args = ap.parse_args()

    p_values = [float(v) for v in args.p.split(",")]
    outdir = run_lambda_table(p_values, n_min=args.n_min, n_max=args.n_max,
                              points=args.points, C=args.c,
                              output_dir=args.out, plots=not args.no_plots)
    for name in sorted(os.listdir(outdir)):
        print(os.path.join(outdir, name))
    return 0


if __name__ == "__main__":
    sys.exit(main())
