"""Condition numbers kappa_r(lambda) of the optimal skeleton, offset by their large-r asymptote.

    python3 scripts/fig2_condition.py --r 10 30 100 --count 8 --out fig2.csv
"""

import argparse
import csv

import numpy as np

from zolotarev.skeleton import analytic_decomposition, kappa, kappa_asymptote, kappa_fit
from zolotarev.domains import SeparatedPair


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--r", type=int, nargs="+", default=list(range(2, 101)))
    ap.add_argument("--lam-min", type=float, default=1e-7)
    ap.add_argument("--lam-max", type=float, default=0.9)
    ap.add_argument("--count", type=int, default=8)
    ap.add_argument("--out", default="fig2_condition.csv")
    args = ap.parse_args()

    lams = np.geomspace(args.lam_min, args.lam_max, args.count)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["lambda", "r", "kappa", "kappa_bar", "offset", "offset_fit"])
        for lam in lams:
            pair = SeparatedPair.symmetric(lam)
            for r in args.r:
                k = max(kappa(analytic_decomposition(r, lam), pair))
                kb = kappa_asymptote(r)
                w.writerow([repr(float(lam)), r, repr(k), repr(kb), repr(k - kb), repr(kappa_fit(lam))])
            r = max(args.r)
            k = max(kappa(analytic_decomposition(r, lam), pair))
            print(f"lambda={lam:9.3g}  r={r}: offset {k - kappa_asymptote(r):8.4f}"
                  f"   fit {kappa_fit(lam):8.4f}")
    print("->", args.out)


if __name__ == "__main__":
    main()
