"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np

from zolotarev.domains import Domain, MobiusMap, SeparatedPair


def objective_n1(X, Y, xt, yt):
    """max_X |x - xt|/|x - yt| * max_Y |y - yt|/|y - xt| for arrays of (xt, yt)."""
    X = np.asarray(X)[:, None]
    Y = np.asarray(Y)[:, None]
    fx = (np.abs(X - xt[None, :]) / np.abs(X - yt[None, :])).max(axis=0)
    fy = (np.abs(Y - yt[None, :]) / np.abs(Y - xt[None, :])).max(axis=0)
    return fx * fy


def brute_force_n1(X, Y, coarse: int = 401, fine: int = 21, zooms: int = 60):
    """Minimax of the degree-(1, 1) problem on point sets by exhaustive grid then zooming.

    The root is searched on (max Y, max X + (max X - max Y)] and the pole on
    the mirror-image range, which contains the optimum for separated sets.
    """
    X, Y = np.sort(X), np.sort(Y)
    gap = X[-1] - Y[-1]
    xr = (Y[-1] + 1e-9 * gap, X[-1] + gap)
    yr = (Y[0] - (X[0] - Y[0]), X[0] - 1e-9 * (X[0] - Y[0]))
    gx = np.linspace(*xr, coarse)
    gy = np.linspace(*yr, coarse)
    A, B = np.meshgrid(gx, gy, indexing="ij")
    F = objective_n1(X, Y, A.ravel(), B.ravel())
    best = np.argsort(F)[:5]
    results = []
    for k in best:
        a, b = A.ravel()[k], B.ravel()[k]
        wa, wb = 2 * (gx[1] - gx[0]), 2 * (gy[1] - gy[0])
        val = F[k]
        for _ in range(zooms):
            ta = np.linspace(a - wa, a + wa, fine)
            tb = np.linspace(b - wb, b + wb, fine)
            AA, BB = np.meshgrid(ta, tb, indexing="ij")
            FF = objective_n1(X, Y, AA.ravel(), BB.ravel())
            j = int(np.argmin(FF))
            if FF[j] <= val:
                a, b, val = AA.ravel()[j], BB.ravel()[j], FF[j]
            wa *= 0.5
            wb *= 0.5
        results.append(val)
    return float(min(results))


def random_mobius(rng, lo: float, hi: float, margin: float = 0.5) -> MobiusMap:
    """Increasing Moebius map whose pole lies outside [lo - margin, hi + margin]."""
    while True:
        a, b, c, d = rng.normal(size=4)
        if abs(c) < 1e-3:
            c = 0.0
            pole_ok = True
        else:
            p = -d / c
            pole_ok = not (lo - margin <= p <= hi + margin)
        det = a * d - b * c
        if pole_ok and abs(det) > 0.1:
            if det < 0:
                a, b = -a, -b
            return MobiusMap(a, b, c, d)


def mapped_pair(m: MobiusMap, pair: SeparatedPair) -> SeparatedPair:
    """Image of a pair under an increasing map; ordering is preserved."""
    def img(dom):
        B = np.asarray(m(dom.bounds), dtype=float)
        return Domain(dom.kind, B)
    return SeparatedPair(img(pair.X), img(pair.Y))


def quadratic_tail_ratio(report, floor_tol: float = 1e-12):
    """log(spread_{k+1})/log(spread_k) for the last step starting below 1e-3
    and ending above the floor; None when no step qualifies."""
    s = report.spread_history
    level = max(1.0, abs(0.5 * report.log_Zn)) if math.isfinite(report.log_Zn) else 1.0
    ratio = None
    for k in range(len(s) - 1):
        if 0 < s[k] < 1e-3 and s[k + 1] > floor_tol * level:
            ratio = math.log(s[k + 1]) / math.log(s[k])
    return ratio
