import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zolotarev.analytic import map_nodes_to_pair, zolotarev_nodes, zolotarev_number_log
from zolotarev.domains import Domain, SeparatedPair, cross_ratio_lambda
from zolotarev.heuristic import (CSV_COLUMNS, ExperimentConfig, best_partition, draw_sample,
                                 heuristic_error_log, heuristic_nodes, partition_bound,
                                 sample_experiment, summarize, write_csv)
from zolotarev.solver import solve

seeds = st.integers(0, 2**32 - 1)


def sample(seed, size=20):
    return draw_sample(np.random.default_rng(seed), size)


def test_zero_partition_is_bounding_interval_number():
    X, Y = sample(1)
    p = partition_bound(X, Y, 3, 0, 0)
    lam = cross_ratio_lambda(X.min(), X.max(), Y.min(), Y.max())
    assert p.log_bound == pytest.approx(zolotarev_number_log(3, lam), rel=1e-14)
    assert p.log_bound == p.log_bound_loose


def test_outlier_is_covered():
    X = np.array([1e-6, 0.3, 0.35, 0.4, 0.5])
    Y = -X
    p = best_partition(X, Y, 2)
    assert p.n_minus >= 1
    assert p.log_bound < partition_bound(X, Y, 2, 0, 0).log_bound
    # a tight cluster far from the gap, plus one distant point
    X2 = np.array([1, 1.01, 1.02, 1.03, 100.0])
    Y2 = np.array([-1, -1.01, -1.02, -1.03, -1.04])
    assert best_partition(X2, Y2, 2).n_plus == 1


@given(seeds, st.integers(1, 6))
def test_bound_chain(seed, n):
    X, Y = sample(seed)
    best = best_partition(X, Y, n)
    for total in range(n + 1):
        for nm in range(total + 1):
            p = partition_bound(X, Y, n, nm, total - nm)
            assert best.log_bound <= p.log_bound
            # each covering factor is at most one
            assert p.log_bound <= p.log_bound_loose + 1e-12


@given(seeds, st.integers(1, 5))
def test_constructed_nodes_respect_bound(seed, n):
    X, Y = sample(seed)
    p = best_partition(X, Y, n)
    xt, yt = heuristic_nodes(p, X, Y)
    assert xt.size == yt.size == n
    err = heuristic_error_log(X, Y, xt, yt)
    assert err <= p.log_bound + 1e-9


@given(seeds, st.integers(1, 4))
def test_solver_beats_heuristic(seed, n):
    X, Y = sample(seed, 12)
    pair = SeparatedPair(Domain.points(X), Domain.points(Y))
    _, rep = solve(pair, n)
    assert rep.log_Zn <= best_partition(X, Y, n).log_bound + 1e-9


def test_covered_points_vanish():
    X, Y = sample(7)
    p = partition_bound(X, Y, 4, 1, 1)
    xt, yt = heuristic_nodes(p, X, Y)
    for x in (X.min(), X.max()):
        assert np.min(np.abs(xt - x)) == 0.0


def test_zero_partition_nodes_are_mapped_analytic_nodes():
    X, Y = sample(3)
    p = partition_bound(X, Y, 4, 0, 0)
    xt, yt = heuristic_nodes(p, X, Y)
    ref = map_nodes_to_pair(zolotarev_nodes(4, cross_ratio_lambda(*p.core_endpoints)),
                            p.core_endpoints, tol=1e-9)
    assert np.array_equal(xt, ref["roots"])
    assert np.array_equal(yt, ref["poles"])


def test_symmetric_data_symmetric_partition():
    X = np.array([1e-3, 0.3, 0.35, 0.4, 0.45, 0.5, 10.0])
    Y = -X
    p = best_partition(X, Y, 3)
    assert p.n_minus == p.n_plus == 1


def test_full_cover_gives_minus_inf():
    X, Y = np.array([0.2, 0.5]), np.array([-0.2, -0.6])
    assert best_partition(X, Y, 2).log_bound == -math.inf
    assert best_partition(X, Y, 5).log_bound == -math.inf


def test_reflected_sets():
    X, Y = sample(11)
    a = best_partition(X, Y, 3)
    b = best_partition(Y, X, 3)
    assert a.log_bound == pytest.approx(b.log_bound, abs=1e-12)
    xt, yt = heuristic_nodes(b, Y, X)
    assert heuristic_error_log(Y, X, xt, yt) <= b.log_bound + 1e-9


def test_errors():
    X, Y = sample(2)
    with pytest.raises(IndexError):
        partition_bound(X, Y, 2, 2, 1)
    with pytest.raises(ValueError):
        best_partition([0.1, 0.5], [0.3], 1)


def test_experiment_determinism_and_csv():
    cfg = ExperimentConfig(seed=5, n_samples=3, set_size=30, n_max=3)
    rows = sample_experiment(cfg, workers=1)
    assert rows == sample_experiment(cfg, workers=2)
    assert len(rows) == 9
    assert all(r["certified"] for r in rows)
    buf = io.StringIO()
    write_csv(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].split(",") == CSV_COLUMNS
    assert len(lines) == 10
    s = summarize(rows)
    assert set(s) == {1, 2, 3}
    assert all(v["median_log_ratio"] >= -1e-12 for v in s.values())


def test_samples_in_range():
    X, Y = sample(0, 1000)
    assert np.all((X > 0) & (X <= 1)) and np.all((Y >= -1) & (Y < 0))
