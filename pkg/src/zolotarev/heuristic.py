"""Heuristic solutions for finite point sets.

Outlying points of X and Y are covered by roots and poles, and the
remaining core is handled by the closed-form solution on its bounding
intervals.  The resulting upper bound needs no optimisation, so the
partition (n_minus near points, n_plus far points) is chosen by
exhaustive search.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .analytic import map_nodes_to_pair, zolotarev_nodes, zolotarev_number_log
from .domains import Domain, SeparatedPair, cross_ratio_lambda
from .solver import SolveOptions, SolverError, solve


@dataclass(frozen=True)
class Partition:
    n: int
    n_minus: int
    n_plus: int
    core_endpoints: tuple  # (xmin, xmax, ymin, ymax) of the core
    log_bound: float
    log_bound_loose: float


def _sorted_sets(X, Y):
    X = np.sort(np.asarray(X, dtype=float))
    Y = np.sort(np.asarray(Y, dtype=float))[::-1]
    if X.size == 0 or Y.size == 0:
        raise ValueError("empty point set")
    if not (X[0] > Y[0] or X[-1] < Y[-1]):
        raise ValueError("point sets are not separated")
    if X[0] < Y[0]:
        # orient so that X lies above Y; the objective is symmetric under z -> -z
        X, Y = -X[::-1], -Y[::-1]
    return X, Y


def _cross_log(x_far, x_i, y_i, y_far):
    """log of (x_far - x_i)(y_i - y_far) / ((x_far - y_i)(x_i - y_far))."""
    return (math.log(abs(x_far - x_i)) + math.log(abs(y_i - y_far))
            - math.log(abs(x_far - y_i)) - math.log(abs(x_i - y_far)))


def partition_bound(X, Y, n: int, n_minus: int, n_plus: int) -> Partition:
    X, Y = _sorted_sets(X, Y)
    if n_minus < 0 or n_plus < 0 or n_minus + n_plus > n:
        raise IndexError("need n_minus, n_plus >= 0 with n_minus + n_plus <= n")
    if n_minus + n_plus >= min(X.size, Y.size):
        raise IndexError("partition leaves an empty core")
    lo, hiX, hiY = n_minus, X.size - n_plus, Y.size - n_plus
    core = (X[lo], X[hiX - 1], Y[hiY - 1], Y[lo])
    m = n - n_minus - n_plus
    if m == 0:
        log_core = 0.0
    elif hiX - lo <= m or hiY - lo <= m:
        log_core = -math.inf  # the core itself can be covered
    else:
        log_core = zolotarev_number_log(m, cross_ratio_lambda(*core))
    xmin, xmax, ymin, ymax = core
    factors = 0.0
    for i in range(n_minus):
        factors += _cross_log(xmax, X[i], Y[i], ymin)
    for i in range(n_plus):
        factors += _cross_log(X[X.size - 1 - i], xmin, ymax, Y[Y.size - 1 - i])
    return Partition(n, n_minus, n_plus, core, log_core + factors, log_core)


def best_partition(X, Y, n: int) -> Partition:
    """Exhaustive minimiser of the bound; ties go to the fewest covered points."""
    X, Y = _sorted_sets(X, Y)
    best = None
    limit = min(n, min(X.size, Y.size) - 1)
    for total in range(limit + 1):
        for nm in range(total + 1):
            p = partition_bound(X, Y, n, nm, total - nm)
            if best is None or p.log_bound < best.log_bound:
                best = p
    return best


def heuristic_nodes(partition: Partition, X, Y, n: int | None = None):
    """Roots and poles of the heuristic solution, in the coordinates of X and Y."""
    n = partition.n if n is None else n
    Xs, Ys = _sorted_sets(X, Y)
    flip = np.min(X) < np.min(Y)
    nm, npl = partition.n_minus, partition.n_plus
    m = n - nm - npl
    xt = [Xs[:nm], Xs[Xs.size - npl:]]
    yt = [Ys[:nm], Ys[Ys.size - npl:]]
    if m > 0:
        X0 = Xs[nm:Xs.size - npl]
        Y0 = Ys[nm:Ys.size - npl]
        if X0.size <= m or Y0.size <= m:
            xt.append(np.resize(X0, m))
            yt.append(np.resize(Y0, m))
        else:
            sol = zolotarev_nodes(m, cross_ratio_lambda(*partition.core_endpoints))
            mapped = map_nodes_to_pair(sol, partition.core_endpoints, tol=1e-9)
            xt.append(mapped["roots"])
            yt.append(mapped["poles"])
    xt = np.concatenate(xt)
    yt = np.concatenate(yt)
    if flip:
        xt, yt = -xt, -yt
    return xt, yt


def heuristic_error_log(X, Y, xt, yt) -> float:
    """log of max over X x Y of |h(x)/h(y)|, enumerated exactly."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    with np.errstate(divide="ignore"):
        lx = (np.log(np.abs(X[:, None] - xt[None, :])).sum(1)
              - np.log(np.abs(X[:, None] - yt[None, :])).sum(1))
        ly = (np.log(np.abs(Y[:, None] - yt[None, :])).sum(1)
              - np.log(np.abs(Y[:, None] - xt[None, :])).sum(1))
    return float(lx.max() + ly.max())


# -- the sampling experiment -----------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    n_samples: int = 1000
    set_size: int = 100
    n_min: int = 1
    n_max: int = 14
    max_iter: int = 200


def draw_sample(rng: np.random.Generator, set_size: int):
    """X uniform on (0, 1], Y uniform on [-1, 0)."""
    X = 1.0 - rng.random(set_size)
    Y = rng.random(set_size) - 1.0
    return X, Y


def _sample_rows(args):
    sample_id, seed_seq, cfg = args
    rng = np.random.Generator(np.random.Philox(seed_seq))
    X, Y = draw_sample(rng, cfg.set_size)
    pair = SeparatedPair(Domain.points(X), Domain.points(Y))
    rows = []
    opts = SolveOptions(max_iter=cfg.max_iter)
    for n in range(cfg.n_min, cfg.n_max + 1):
        p = best_partition(X, Y, n)
        try:
            _, rep = solve(pair, n, opts)
            log_zn, iters, cert = rep.log_Zn, rep.iterations, rep.certified
        except SolverError as e:
            rep = e.report
            log_zn = rep.log_Zn if rep is not None else math.nan
            iters = rep.iterations if rep is not None else -1
            cert = False
        rows.append({"sample_id": sample_id, "n": n, "log_Zn": log_zn,
                     "log_bound": p.log_bound, "n_minus": p.n_minus,
                     "n_plus": p.n_plus, "solver_iters": iters, "certified": cert})
    return rows


def worker_count() -> int:
    env = os.environ.get("ZS_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def sample_experiment(cfg: ExperimentConfig, workers: int | None = None) -> list[dict]:
    """Rows of the point-set experiment, deterministic for a given seed."""
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_samples)
    jobs = [(i, children[i], cfg) for i in range(cfg.n_samples)]
    workers = worker_count() if workers is None else workers
    if workers <= 1:
        chunks = map(_sample_rows, jobs)
        return [r for rows in chunks for r in rows]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return [r for rows in ex.map(_sample_rows, jobs, chunksize=4) for r in rows]


CSV_COLUMNS = ["sample_id", "n", "log_Zn", "log_bound", "n_minus", "n_plus",
               "solver_iters", "certified"]


def write_csv(rows, path_or_file):
    own = isinstance(path_or_file, (str, os.PathLike))
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(r)
    finally:
        if own:
            f.close()


def summarize(rows, n_values=None):
    """Per-n medians of Z_n and bound/Z_n, plus the median bound at ceil(1.1 n)."""
    by_n = {}
    for r in rows:
        by_n.setdefault(r["n"], []).append(r)
    out = {}
    for n in sorted(by_n if n_values is None else n_values):
        g = by_n[n]
        lz = np.array([r["log_Zn"] for r in g], dtype=float)
        lb = np.array([r["log_bound"] for r in g], dtype=float)
        ok = np.isfinite(lz)
        shifted = math.ceil(1.1 * n)
        sb = (np.median([r["log_bound"] for r in by_n[shifted]])
              if shifted in by_n else math.nan)
        out[n] = {
            "median_log_Zn": float(np.median(lz[ok])) if ok.any() else math.nan,
            "median_log_ratio": float(np.median(lb[ok] - lz[ok])) if ok.any() else math.nan,
            "median_log_bound_shifted": float(sb),
            "failures": int(np.count_nonzero(~ok)),
        }
    return out
