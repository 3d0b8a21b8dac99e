"""Point-set experiment: Z_n of random point sets against the heuristic bound.

    python3 scripts/fig1_heuristic.py --samples 200 --seed 2024 --out fig1.csv

Writes the per-sample table and prints per-n medians together with the
reference laws 0.12^(n-2) and 1.2^(n-4).
"""

import argparse
import math
import time

from zolotarev.heuristic import ExperimentConfig, sample_experiment, summarize, write_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-max", type=int, default=14)
    ap.add_argument("--out", default="fig1_heuristic.csv")
    args = ap.parse_args()

    t0 = time.time()
    cfg = ExperimentConfig(seed=args.seed, n_samples=args.samples, n_max=args.n_max)
    rows = sample_experiment(cfg)
    write_csv(rows, args.out)
    print(f"{len(rows)} rows in {time.time() - t0:.1f} s -> {args.out}")
    print(" n   median Z_n   /0.12^(n-2)   median bound/Z_n   /1.2^(n-4)   shifted/Z_n")
    for n, s in summarize(rows).items():
        z = math.exp(s["median_log_Zn"])
        ratio = math.exp(s["median_log_ratio"])
        shifted = math.exp(s["median_log_bound_shifted"] - s["median_log_Zn"])
        print(f"{n:2d}  {z:11.4g}  {z / 0.12 ** (n - 2):12.3f}  {ratio:17.3f}"
              f"  {ratio / 1.2 ** (n - 4):11.3f}  {shifted:11.3f}")


if __name__ == "__main__":
    main()
