import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from zolotarev.analytic import zolotarev_nodes, zolotarev_number_log
from zolotarev.domains import Domain, PoleError, SeparatedPair, log_abs_ratio
from zolotarev.skeleton import (EULER_GAMMA, Form, SkeletonDecomposition, analytic_decomposition,
                                cauchy, cauchy_inverse, eval_interp, extremal_pair_count, kappa,
                                kappa_asymptote, kappa_fit, max_relative_error, reconstruct,
                                relative_error)
from zolotarev.solver import solve

lambdas = st.sampled_from([1e-7, 1e-4, 1e-2, 0.3, 0.9])


def h(z, dec):
    return np.exp(log_abs_ratio(z, dec.xt, dec.yt)) * np.sign(
        np.prod(z[:, None] - dec.xt[None, :], axis=1) * np.prod(z[:, None] - dec.yt[None, :], axis=1))


# -- interpolation vectors -------------------------------------------------------

@given(st.integers(1, 30), lambdas)
def test_interpolation_property(r, lam):
    dec = analytic_decomposition(r, lam)
    assert np.array_equal(eval_interp(dec, "u", dec.xt), np.eye(r))
    assert np.array_equal(eval_interp(dec, "v", dec.yt), np.eye(r))


@given(st.integers(1, 30), lambdas, st.integers(0, 2**32 - 1))
def test_normalization_identity(r, lam, seed):
    """sum_i u_i(z) = 1 - h(z), and sum_i v_i(z) = 1 - 1/h(z)."""
    dec = analytic_decomposition(r, lam)
    rng = np.random.default_rng(seed)
    zx = np.exp(rng.uniform(math.log(lam), 0, 100))
    zy = -np.exp(rng.uniform(math.log(lam), 0, 100))
    su = eval_interp(dec, "u", zx).sum(axis=1)
    sv = eval_interp(dec, "v", zy).sum(axis=1)
    hx, hy = h(zx, dec), h(zy, dec)
    U = np.abs(eval_interp(dec, "u", zx)).sum(axis=1)
    V = np.abs(eval_interp(dec, "v", zy)).sum(axis=1)
    # rounding in the sum scales with sum |u_i| (at most the Lebesgue function)
    assert np.all(np.abs(su - (1 - hx)) <= 1e-13 * np.maximum(1, U))
    assert np.all(np.abs(sv - (1 - 1 / hy)) <= 1e-13 * np.maximum(1, V))
    small = np.abs(hx) < 1e-14
    assert np.all(np.abs(su[small] - 1) <= 1e-13 * np.maximum(1, U[small]))


def test_r1_against_direct_inverse():
    dec = SkeletonDecomposition.from_nodes([0.4], [-0.3])
    z = np.array([0.1, 0.7, 2.0])
    direct = (1.0 / (-0.3 - 0.4)) ** -1 * (1.0 / (-0.3 - z))
    assert eval_interp(dec, "u", z)[:, 0] == pytest.approx(direct, rel=1e-15)


@pytest.mark.parametrize("r", [2, 4, 6])
def test_u_against_dense_formula(r):
    dec = analytic_decomposition(r, 0.3)
    z = np.linspace(0.3, 1, 9)
    # u(z)^T = C(z, yt) C(xt, yt)^{-1}, solved in extended precision
    with mpmath.workdps(50):
        C = mpmath.matrix([[1 / (mpmath.mpf(a) - mpmath.mpf(b)) for b in dec.yt] for a in dec.xt])
        Ci = C ** -1
        dense = np.array([[float(sum(1 / (mpmath.mpf(zz) - mpmath.mpf(dec.yt[j])) * Ci[j, i]
                                     for j in range(r))) for i in range(r)] for zz in z])
    assert eval_interp(dec, "u", z) == pytest.approx(dense, rel=1e-12, abs=1e-14)


def test_pole_error():
    dec = analytic_decomposition(3, 0.1)
    with pytest.raises(PoleError):
        eval_interp(dec, "u", dec.yt[1])


def test_cauchy_inverse():
    dec = analytic_decomposition(8, 0.05)
    Ci = cauchy_inverse(dec)
    assert Ci @ cauchy(dec.xt, dec.yt) == pytest.approx(np.eye(8), abs=1e-9)


# -- reconstruction -------------------------------------------------------------------

@pytest.mark.parametrize("form", list(Form))
def test_exact_at_nodes(form):
    dec = analytic_decomposition(6, 1e-3)
    y = np.linspace(-1, -1e-3, 50)
    approx = reconstruct(dec, dec.xt, y, form)
    exact = 1.0 / (dec.xt[:, None] - y[None, :])
    assert approx == pytest.approx(exact, rel=1e-13)
    x = np.linspace(1e-3, 1, 50)
    err = relative_error(dec, x, dec.yt, form)
    assert np.max(err) <= 1e-13 * 10 ** (6 if form is Form.RAW else 0)


def test_rank_zero():
    dec = SkeletonDecomposition.from_nodes([], [])
    assert reconstruct(dec, 0.5, -0.5) == 0.0
    assert relative_error(dec, [0.5], [-0.5])[0, 0] == 1.0
    assert max_relative_error(dec, SeparatedPair.symmetric(0.1)) == 1.0


@pytest.mark.parametrize("lam", [1e-7, 1e-4, 1e-1, 0.9])
@pytest.mark.parametrize("r", [2, 10, 30])
def test_stable_forms_agree(lam, r):
    dec = analytic_decomposition(r, lam)
    pair = SeparatedPair.symmetric(lam)
    kxy, kyx = kappa(dec, pair)
    x = np.geomspace(lam, 1, 60)
    y = -np.geomspace(lam, 1, 60)
    L = reconstruct(dec, x, y, Form.LEFT)
    R = reconstruct(dec, x, y, Form.RIGHT)
    T = reconstruct(dec, x, y, Form.TWO_SIDED)
    W = np.abs(x[:, None] - y[None, :])
    assert np.max(np.abs(L - R) * W) <= 1e-12 * (kxy + kyx)
    assert np.max(np.abs(L - T) * W) <= 1e-12 * (kxy + kyx)


def test_json_round_trip():
    dec = analytic_decomposition(7, 1e-3, Form.LEFT)
    back = SkeletonDecomposition.from_json(dec.to_json())
    assert back.form is Form.LEFT
    for f in ("xt", "yt", "u_logw", "u_sign", "v_logw", "v_sign"):
        assert np.array_equal(getattr(back, f), getattr(dec, f))


# -- maximum error -----------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 4, 9])
def test_max_error_matches_certified_solver(n):
    X = Domain.intervals([[0.02, 0.3], [0.5, 1.0]])
    Y = Domain.intervals([[-1.0, -0.2], [-0.1, -0.01]])
    pair = SeparatedPair(X, Y)
    eq, rep = solve(pair, n)
    assert rep.certified
    dec = SkeletonDecomposition.from_solution(eq)
    assert max_relative_error(dec, pair) == pytest.approx(math.exp(rep.log_Zn), rel=1e-8)


def test_max_error_is_zolotarev_number():
    dec = analytic_decomposition(8, 1e-3)
    val = max_relative_error(dec, SeparatedPair.symmetric(1e-3), log=True)
    assert val == pytest.approx(zolotarev_number_log(8, 1e-3), rel=1e-12)


@pytest.mark.parametrize("r", [1, 3, 8])
def test_extremal_pairs(r):
    dec = analytic_decomposition(r, 1e-2)
    assert extremal_pair_count(dec, SeparatedPair.symmetric(1e-2)) == (r + 1) ** 2


def test_covering_gives_zero_error():
    pair = SeparatedPair(Domain.points([0.5, 1.0]), Domain.interval(-1, -0.1))
    dec = SkeletonDecomposition.from_nodes([0.5, 1.0], [-0.3, -0.6])
    assert max_relative_error(dec, pair) == 0.0


# -- condition numbers ---------------------------------------------------------------------

def test_kappa_r1():
    lam = 0.01
    kxy, kyx = kappa(analytic_decomposition(1, lam), SeparatedPair.symmetric(lam))
    assert kxy >= 1 and kyx >= 1
    assert kxy == pytest.approx(kyx, rel=1e-12)


def test_kappa_chebyshev_limit():
    offsets = []
    for lam in (0.9, 0.99, 0.999):
        k = max(kappa(analytic_decomposition(20, lam), SeparatedPair.symmetric(lam)))
        offsets.append(k - kappa_asymptote(20))
    assert all(abs(a) >= abs(b) for a, b in zip(offsets, offsets[1:]))
    assert abs(offsets[-1]) < 1e-3


def test_kappa_fit_example():
    lam, r = 1e-5, 50
    k = max(kappa(analytic_decomposition(r, lam), SeparatedPair.symmetric(lam)))
    assert abs(k - kappa_asymptote(r) - kappa_fit(lam)) <= 0.05


def test_kappa_point_set_exact_scan():
    X = np.array([0.1, 0.3, 0.6, 1.0])
    Y = -X[::-1]
    pair = SeparatedPair(Domain.points(X), Domain.points(Y))
    dec = SkeletonDecomposition.from_nodes([0.2, 0.7], [-0.2, -0.7])
    kxy, _ = kappa(dec, pair)
    U = eval_interp(dec, "u", X)
    scan = max(sum(abs(U[k, i]) * max(abs((x - y) / (dec.xt[i] - y)) for y in Y)
                   for i in range(2)) for k, x in enumerate(X))
    assert kxy == pytest.approx(scan, rel=1e-14)


def test_kappa_asymptote():
    assert kappa_asymptote(1) == pytest.approx((2 / math.pi) * (EULER_GAMMA + math.log(8 / math.pi)))
    vals = [kappa_asymptote(r) for r in range(1, 50)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert kappa_asymptote(100) - kappa_asymptote(10) == pytest.approx((2 / math.pi) * math.log(10))
    with pytest.raises(ValueError):
        kappa_asymptote(0)
