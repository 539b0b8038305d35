#!/usr/bin/env python3
"""Sweep the degree parameter and tabulate packing densities.

Runs the full pipeline at each grid point for a fixed dimension and
writes sweep.csv next to a printed table.  Usage:

    python scripts/density_sweep.py --d 2 --deltas 10,20,30,40 --out results/
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from normpack.harness import default_config, sweep, write_sweep_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=2, choices=(2, 3, 4))
    ap.add_argument("--deltas", default="10,15,20,25,30,40")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    deltas = [float(v) for v in args.deltas.split(",")]
    template = default_config(args.d, seed=args.seed)
    rows = sweep(template, deltas=deltas, workers=args.workers)

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "sweep.csv")
    write_sweep_csv(rows, path)

    hdr = f"{'Delta':>8} {'n_pre':>7} {'n_post':>7} {'|A|':>6} {'density':>9} {'2^-d':>7} {'logD/D':>8}"
    print(hdr)
    print("-" * len(hdr))
    for row in rows:
        if row["status"] != "ok":
            print(f"{row['Delta']:>8} {row['status']}")
            continue
        print(
            f"{row['Delta']:>8.0f} {row['n_pre']:>7} {row['n_post']:>7} "
            f"{row['independent_set']:>6} {row['density']:>9.4f} "
            f"{row['trivial_bound']:>7.4f} {row['log_delta_over_delta']:>8.4f}"
        )
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
