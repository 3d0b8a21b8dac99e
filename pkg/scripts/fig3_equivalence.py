"""Transferability of skeletons and truncated SVDs at n = 99 across lambda.

    python3 scripts/fig3_equivalence.py --out fig3.csv

Prints the power-law slopes of max_r mu (over the large-r plateau and over
all ranks) and of eta_plus/eta_minus.
"""

import argparse
import csv
import time

import numpy as np

from zolotarev.svd_compare import (CSV_COLUMNS, extrema_geometry, plateau_cap,
                                   power_law_slope, report_rows, transferability)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=99)
    ap.add_argument("--lams", type=float, nargs="+", default=[1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2])
    ap.add_argument("--out", default="fig3_equivalence.csv")
    args = ap.parse_args()

    cap = plateau_cap(args.n)
    stats = []
    with open(args.out, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for lam in args.lams:
            t0 = time.time()
            x, y = extrema_geometry(args.n, lam)
            rep = transferability(x, y, args.n - 1, lam_weights=lam)
            for row in report_rows(lam, rep):
                w.writerow(row)
            stats.append((rep.max_mu(cap), rep.max_mu(), rep.eta_ratio, rep.eta_ratio_w))
            print(f"lambda={lam:7.0e}  {time.time() - t0:5.1f} s  max mu (r<={cap}) "
                  f"{stats[-1][0][0]:9.3g} {stats[-1][0][1]:9.3g}  eta+/eta- {rep.eta_ratio:9.3g}"
                  f"  bounds hold: {rep.bounds_hold()}")
    lams = np.array(args.lams)
    col = lambda f: [f(s) for s in stats]
    print(f"slope max mu_skel  (r<={cap}) {power_law_slope(lams, col(lambda s: s[0][0])):+.3f}"
          f"   all r {power_law_slope(lams, col(lambda s: s[1][0])):+.3f}")
    print(f"slope max mu_svd   (r<={cap}) {power_law_slope(lams, col(lambda s: s[0][1])):+.3f}"
          f"   all r {power_law_slope(lams, col(lambda s: s[1][1])):+.3f}")
    print(f"slope eta+/eta-            {power_law_slope(lams, col(lambda s: s[2])):+.3f}")
    print(f"slope weighted eta ratio   {power_law_slope(lams, col(lambda s: s[3])):+.3f}")


if __name__ == "__main__":
    main()
