"""Dense SVD, the 2-norm / xy-norm equivalence and transferability of low-rank approximants.

Two SVD routes are provided:

* ``dense_svd``: one-sided Jacobi (Hestenes) with a round-robin ordering,
  applied to the triangular factor of a pivoted QR, for arbitrary dense
  matrices.  Backward stable, so singular values below
  about eps * sigma_1 are not resolved.
* ``cauchy_svd``: for (diagonally scaled) Cauchy matrices.  Structured
  Gaussian elimination with complete pivoting gives a rank-revealing
  factorisation X D Y^T whose factors are accurate to relative precision;
  a pivoted QR of X D followed by one-sided Jacobi on the graded product
  then yields every singular value to high relative accuracy, which is
  what the exponentially small tails of Cauchy matrices need.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .domains import Domain, SeparatedPair, log_abs_ratio
from .solver import SolveOptions, SolverError, solve

EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    pass


# -- one-sided Jacobi -------------------------------------------------------

def _round_robin(k: int):
    """Rounds of disjoint index pairs covering every pair once (k even)."""
    players = list(range(k))
    rounds = []
    for _ in range(k - 1):
        half = k // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((p, q))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi_columns(G: np.ndarray, max_sweeps: int = 50, tol: float | None = None):
    """Orthogonalise the columns of G in place; returns (G, V, sweeps) with G_in V = G_out."""
    m, n = G.shape
    V = np.eye(n)
    if n < 2:
        return G, V, 0
    if tol is None:
        tol = max(m, n) * EPS
    k = n + (n % 2)
    if k != n:  # pad with a zero column so every round pairs all indices
        G = np.hstack([G, np.zeros((m, 1))])
        V = np.pad(V, ((0, 1), (0, 1)))
    rounds = _round_robin(k)
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p, q in rounds:
            Gp, Gq = G[:, p], G[:, q]
            alpha = np.einsum("ij,ij->j", Gp, Gp)
            beta = np.einsum("ij,ij->j", Gq, Gq)
            gamma = np.einsum("ij,ij->j", Gp, Gq)
            with np.errstate(invalid="ignore", divide="ignore"):
                off = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            off &= gamma != 0
            if not np.any(off):
                continue
            rotated = True
            p, q = p[off], q[off]
            a, b, g = alpha[off], beta[off], gamma[off]
            zeta = (b - a) / (2.0 * g)
            t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            t = np.where(zeta == 0, 1.0, t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            Gp, Gq = G[:, p], G[:, q]
            G[:, p] = c * Gp - s * Gq
            G[:, q] = s * Gp + c * Gq
            Vp, Vq = V[:, p], V[:, q]
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
        if not rotated:
            return G[:, :n], V[:n, :n], sweep
    raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def _finish(G: np.ndarray, V: np.ndarray):
    """Split orthogonal columns into U * sigma, sort descending, complete U."""
    s = np.sqrt(np.einsum("ij,ij->j", G, G))
    order = np.argsort(-s, kind="stable")
    s, G, V = s[order], G[:, order], V[:, order]
    U = np.zeros_like(G)
    nz = s > 0
    U[:, nz] = G[:, nz] / s[nz]
    if not np.all(nz):
        # complete an orthonormal basis for the null directions
        Q, _ = np.linalg.qr(np.hstack([U[:, nz], np.eye(G.shape[0])]))
        U[:, ~nz] = Q[:, np.count_nonzero(nz):np.count_nonzero(nz) + np.count_nonzero(~nz)]
    return U, s, V


def dense_svd(A, max_sweeps: int = 50):
    """Thin SVD A = U diag(sigma) V^T by one-sided Jacobi; sigma descending."""
    A = np.array(A, dtype=float, copy=True)
    if A.ndim != 2:
        raise ValueError("need a matrix")
    if max(A.shape) > 512:
        raise ValueError("desk-scale SVD: dimensions must be <= 512")
    if not np.all(np.isfinite(A)):
        raise ValueError("non-finite entries")
    m, n = A.shape
    if m < n:
        U, s, V = dense_svd(A.T, max_sweeps)
        return V, s, U
    if n == 0:
        return np.zeros((m, 0)), np.zeros(0), np.zeros((0, 0))
    # pivoted QR first: Jacobi on R^T needs far fewer sweeps than on A
    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    G, W, _ = _jacobi_columns(R.T.copy(), max_sweeps)
    Ur, s, Wr = _finish(G, W)
    # R^T = Ur diag(s) Wr^T  =>  A[:, piv] = Q R = (Q Wr) diag(s) Ur^T
    V = np.empty_like(Ur)
    V[piv, :] = Ur
    return Q @ Wr, s, V


def norm2(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(dense_svd(A)[1][0])


# -- accurate SVD of Cauchy-like matrices ----------------------------------

def cauchy_rrd(x, y, a=None, b=None):
    """Rank-revealing X diag(d) Y^T of diag(a) C(x, y) diag(b) by structured GECP.

    Schur complements of a Cauchy-like matrix keep the form
    S_ij * (x_i - x_p)(y_q - y_j) / ((x_i - y_q)(x_p - y_j)), so every entry
    is a product of differences of the data and keeps relative accuracy.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = x.size, y.size
    a = np.ones(m) if a is None else np.asarray(a, dtype=float)
    b = np.ones(n) if b is None else np.asarray(b, dtype=float)
    D = x[:, None] - y[None, :]
    if np.any(D == 0):
        raise ZeroDivisionError("x_i == y_j")
    S = a[:, None] * b[None, :] / D
    N = min(m, n)
    X = np.zeros((m, N))
    Y = np.zeros((n, N))
    d = np.zeros(N)
    rows = np.ones(m, dtype=bool)
    cols = np.ones(n, dtype=bool)
    for k in range(N):
        sub = np.where(rows[:, None] & cols[None, :], np.abs(S), -1.0)
        p, q = np.unravel_index(int(np.argmax(sub)), sub.shape)
        piv = S[p, q]
        if piv == 0:
            break
        d[k] = piv
        X[rows, k] = S[rows, q] / piv
        Y[cols, k] = S[p, cols] / piv
        rows[p] = False
        cols[q] = False
        ri, cj = np.flatnonzero(rows), np.flatnonzero(cols)
        if ri.size and cj.size:
            xi, yj = x[ri][:, None], y[cj][None, :]
            S[np.ix_(ri, cj)] *= ((xi - x[p]) * (y[q] - yj)) / ((xi - y[q]) * (x[p] - yj))
    return X, d, Y


def svd_from_rrd(X, d, Y, max_sweeps: int = 50):
    """SVD of X diag(d) Y^T to high relative accuracy (pivoted QR, then Jacobi)."""
    XD = X * d[None, :]
    Q, R, piv = scipy.linalg.qr(XD, mode="economic", pivoting=True)
    W = R @ Y[:, piv].T  # X D Y^T = Q W
    G, V, _ = _jacobi_columns(W.T.copy(), max_sweeps)
    Ug, s, Vg = _finish(G, V)
    # W^T = Ug diag(s) Vg^T  =>  A = Q W = (Q Vg) diag(s) Ug^T
    return Q @ Vg, s, Ug


def cauchy_svd(x, y, a=None, b=None):
    """U, sigma, V of diag(a) C(x, y) diag(b), accurate for tiny sigma."""
    return svd_from_rrd(*cauchy_rrd(x, y, a, b))


# -- norms and equivalence coefficients -------------------------------------

def cauchy_matrix(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 1.0 / (x[:, None] - y[None, :])


def norm_xy(A, x, y) -> float:
    """Elementwise relative maximum norm max |(x_i - y_j) A_ij|."""
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs((x[:, None] - y[None, :]) * A)))


def eta_coefficients(x, y) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eta_minus = 1.0 / float(np.max(np.abs(x[:, None] - y[None, :])))
    eta_plus = norm2(cauchy_matrix(x, y))
    return eta_minus, eta_plus


def weighted_eta(x, y, p, q) -> tuple[float, float]:
    """eta_-(P, Q) = min |p_i q_j / (x_i - y_j)|, eta_+(P, Q) = ||P C Q||_2."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("weights must be positive")
    M = p[:, None] * cauchy_matrix(x, y) * q[None, :]
    return float(np.min(np.abs(M))), norm2(M)


def sqrt_lambda_weights(x, y, lam: float):
    """p_i = |x_i| + sqrt(lam), q_j = |y_j| + sqrt(lam) for the symmetric geometry."""
    r = math.sqrt(lam)
    return np.abs(np.asarray(x)) + r, np.abs(np.asarray(y)) + r


# -- transferability --------------------------------------------------------

@dataclass
class RankRow:
    r: int
    sigma_next: float
    err2_svd: float
    err2_skel: float
    errxy_svd: float
    errxy_skel: float
    mu_skel: float
    mu_svd: float
    certified: bool
    log_Zr: float
    epsilon_summation_estimate: float = math.nan
    error: str = ""


@dataclass
class ComparisonReport:
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray
    eta_minus: float
    eta_plus: float
    eta_minus_w: float = math.nan
    eta_plus_w: float = math.nan
    rows: list = field(default_factory=list)

    @property
    def eta_ratio(self) -> float:
        return self.eta_plus / self.eta_minus

    @property
    def eta_ratio_w(self) -> float:
        return self.eta_plus_w / self.eta_minus_w

    def bounds_hold(self, rtol: float = 1e-9) -> bool:
        bound = self.eta_ratio * (1 + rtol)
        for row in self.rows:
            if row.error:
                continue
            if not (row.mu_skel >= 1 - rtol and row.mu_svd >= 1 - rtol):
                return False
            if not row.mu_skel * row.mu_svd <= bound:
                return False
        return True

    def max_mu(self, r_cap: int | None = None):
        """Largest (mu_skel, mu_svd) over ranks r <= r_cap (all ranks by default)."""
        ok = [r for r in self.rows if not r.error and (r_cap is None or r.r <= r_cap)]
        return max(r.mu_skel for r in ok), max(r.mu_svd for r in ok)


def _skeleton_residual(x, y, roots, poles):
    """C - C_skel = diag(h(x)) C diag(1/h(y)) exactly, and log|h| factors."""
    lhx = log_abs_ratio(x, roots, poles)
    lhy = log_abs_ratio(y, poles, roots)  # -log|h(y)|
    sx = np.sign(np.prod(np.sign(x[:, None] - roots[None, :]) * np.sign(x[:, None] - poles[None, :]), axis=1))
    sy = np.sign(np.prod(np.sign(y[:, None] - poles[None, :]) * np.sign(y[:, None] - roots[None, :]), axis=1))
    return lhx, lhy, sx, sy


def _epsilon_estimate(x, y, roots, poles, R):
    """max |fl(two-sided form) - exact| |x - y| / (kappa_xy + kappa_yx) over all entries."""
    from .skeleton import SkeletonDecomposition, _kappa_fn, reconstruct
    try:
        dec = SkeletonDecomposition.from_nodes(roots, poles)
    except ZeroDivisionError:
        return math.nan
    exact = cauchy_matrix(x, y) - R
    approx = reconstruct(dec, x, y)
    num = np.max(np.abs(approx - exact) * np.abs(x[:, None] - y[None, :]))
    kx = float(_kappa_fn(x, dec.xt, dec.yt, dec.u_logw, dec.u_sign, y).max())
    ky = float(_kappa_fn(y, dec.yt, dec.xt, dec.v_logw, dec.v_sign, x).max())
    return float(num / (kx + ky))


def transferability(x, y, r_max: int, lam_weights: float | None = None,
                    opts: SolveOptions | None = None, with_epsilon: bool = False) -> ComparisonReport:
    """Compare optimal skeletons and truncated SVDs of C(x, y) for r = 1..r_max."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))[::-1]
    U, sigma, V = cauchy_svd(x, y)
    eta_minus = 1.0 / float(np.max(np.abs(x[:, None] - y[None, :])))
    eta_plus = float(sigma[0])
    rep = ComparisonReport(x, y, sigma, eta_minus, eta_plus)
    if lam_weights is not None:
        p, q = sqrt_lambda_weights(x, y, lam_weights)
        rep.eta_minus_w, rep.eta_plus_w = weighted_eta(x, y, p, q)
    pair = SeparatedPair(Domain.points(x), Domain.points(y))
    if opts is None:
        opts = SolveOptions(init="best")
    W = np.abs(x[:, None] - y[None, :])
    # tail sums of the SVD, accumulated from the smallest singular value up
    N = sigma.size
    tail = np.zeros((x.size, y.size))
    tails = [None] * (N + 1)
    tails[N] = tail.copy()
    for k in range(N - 1, -1, -1):
        tail += sigma[k] * np.outer(U[:, k], V[:, k])
        tails[k] = tail.copy()
    for r in range(1, min(r_max, N - 1) + 1):
        err2_svd = float(sigma[r])
        errxy_svd = float(np.max(W * np.abs(tails[r])))
        try:
            eq, srep = solve(pair, r, opts)
            certified, log_zr = srep.certified, srep.log_Zn
        except SolverError as e:
            rep.rows.append(RankRow(r, err2_svd, err2_svd, math.nan, errxy_svd, math.nan,
                                    math.nan, math.nan, False, math.nan, error=str(e)))
            continue
        roots, poles = eq.roots(), eq.poles()
        lhx, lhy, sx, sy = _skeleton_residual(x, y, roots, poles)
        errxy_skel = math.exp(float(lhx.max() + lhy.max()))
        # scale out the largest factor before exponentiating
        shift = float(lhx.max() + lhy.max())
        Rs = (sx * np.exp(lhx - lhx.max()))[:, None] * cauchy_matrix(x, y) * (sy * np.exp(lhy - lhy.max()))[None, :]
        err2_skel = norm2(Rs) * math.exp(shift)
        eps_est = math.nan
        if with_epsilon:
            eps_est = _epsilon_estimate(x, y, roots, poles, Rs * math.exp(shift))
        rep.rows.append(RankRow(r, err2_svd, err2_svd, err2_skel, errxy_svd, errxy_skel,
                                err2_skel / err2_svd, errxy_svd / errxy_skel, certified,
                                log_zr, eps_est))
    return rep


def extrema_geometry(n: int, lam: float):
    """The n local extrema of the closed-form solution of degree n - 1 on [lam, 1] x [-1, -lam]."""
    from .analytic import zolotarev_nodes
    sol = zolotarev_nodes(n - 1, lam)
    return sol.x.copy(), sol.y.copy()


CSV_COLUMNS = ["lambda", "r", "err2_svd", "err2_skel", "errxy_svd", "errxy_skel",
               "mu_skel", "mu_svd", "eta_minus", "eta_plus", "eta_minus_w", "eta_plus_w",
               "certified", "log_Zr", "epsilon_summation_estimate"]


def report_rows(lam: float, rep: ComparisonReport):
    for row in rep.rows:
        yield {"lambda": lam, "r": row.r, "err2_svd": row.err2_svd, "err2_skel": row.err2_skel,
               "errxy_svd": row.errxy_svd, "errxy_skel": row.errxy_skel,
               "mu_skel": row.mu_skel, "mu_svd": row.mu_svd,
               "eta_minus": rep.eta_minus, "eta_plus": rep.eta_plus,
               "eta_minus_w": rep.eta_minus_w, "eta_plus_w": rep.eta_plus_w,
               "certified": row.certified, "log_Zr": row.log_Zr,
               "epsilon_summation_estimate": row.epsilon_summation_estimate}


def plateau_cap(n: int) -> int:
    """Largest rank counted in the large-r plateau of mu at matrix size n.

    The last tenth of ranks (r close to n) is a finite-size regime in which
    the skeleton residual is dominated by one or two uncovered points and
    mu_skel grows like 1/lambda; it is excluded when maximising over r.
    """
    return int(math.floor(0.9 * (n - 1)))


def power_law_slope(lams, values) -> float:
    """Least-squares slope of log(values) against log(lams)."""
    return float(np.polyfit(np.log(lams), np.log(values), 1)[0])
