"""Equioscillation solver for Z_n(X, Y) on finite unions of closed intervals.

The iteration works in normalised coordinates (X in [lam, 1], Y in
[-1, -lam]) and alternates three steps:

1. locate the extrema x_i, y_i of log|h| between consecutive roots/poles,
2. solve the linearised equioscillation system in closed form (Cauchy
   determinants, all products carried as log-magnitude + sign),
3. golden-section search along the correction expressed in the logistic
   coordinates s, t, which keep every root between its two extrema.

The loop stops when the spread of the extremal log-magnitudes can no longer
be reduced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analytic import zolotarev_nodes
from .domains import Domain, EmptySliceError, SeparatedPair, log_abs_ratio, slice_maxima
from .special import EllipticModulus

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class SolverError(RuntimeError):
    def __init__(self, msg, state=None, report=None):
        super().__init__(msg)
        self.state = state
        self.report = report


class CardinalityError(SolverError):
    """A domain cannot host n + 1 distinct extrema."""


class CoincidenceError(SolverError):
    """An extremum coincides with a root or pole."""


class DegenerateGeometryError(SolverError):
    """A difference in the correction formula vanished (numerical floor)."""


class StagnationError(SolverError):
    """The spread stopped decreasing before reaching the acceptance level."""


class MaxIterError(SolverError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    max_iter: int = 200
    certify_tol: float = 1e-8
    stagnation_tol: float = 1e-6
    alpha_tol: float = 1e-3
    # spreads below this (relative to |a|) are at the rounding floor
    floor_tol: float = 1e-12
    # starting point: "farthest" (farthest-point insertion), "analytic"
    # (closed-form nodes of the bounding intervals) or "best" (smaller spread)
    init: str = "farthest"
    fallback: bool = True
    check_unimodal: bool = False


@dataclass
class Equioscillator:
    n: int
    pair: SeparatedPair
    xt: np.ndarray          # roots, ascending (normalised coordinates)
    yt: np.ndarray          # poles, descending
    x: np.ndarray = None    # extrema in X, ascending
    y: np.ndarray = None    # extrema in Y, descending
    c: np.ndarray = None    # log|h(x_i)| - b
    d: np.ndarray = None    # -log|h(y_i)| - b... i.e. d_i with h's scale removed
    b: float = 0.0
    a: float = 0.0
    deviation: float = math.inf
    covering: bool = False
    # covered point sets, kept in the caller's coordinates so they are exact
    exact_roots: np.ndarray = None
    exact_poles: np.ndarray = None

    @property
    def log_Zn(self) -> float:
        return -math.inf if self.covering else 2.0 * self.a

    def values(self):
        """log|h(x_i)| and -log|h(y_i)| at the current b."""
        return self.b + self.c, -self.b + self.d

    def roots(self) -> np.ndarray:
        if self.exact_roots is not None:
            return self.exact_roots.copy()
        return np.asarray(self.pair.inverse_map(self.xt), dtype=float)

    def poles(self) -> np.ndarray:
        if self.exact_poles is not None:
            return self.exact_poles.copy()
        return np.asarray(self.pair.inverse_map(self.yt), dtype=float)

    def extrema(self):
        m = self.pair.inverse_map
        return np.asarray(m(self.x), dtype=float), np.asarray(m(self.y), dtype=float)

    def copy(self) -> "Equioscillator":
        return replace(self)


@dataclass(frozen=True)
class SolveReport:
    log_Zn: float
    iterations: int
    final_deviation: float
    certified: bool
    alpha_history: tuple = ()
    spread_history: tuple = ()
    termination: str = ""

    def __post_init__(self):
        if self.certified and not math.isinf(self.log_Zn):
            assert math.isfinite(self.final_deviation)


# -- initialisation ---------------------------------------------------------

def _farthest_insertion(pieces: np.ndarray, count: int) -> np.ndarray:
    """Insert points into a union of closed pieces of [0, 1], each as far as
    possible from those already inserted, starting at 0."""
    inserted = np.array([0.0])
    for _ in range(count - 1):
        mids = 0.5 * (inserted[1:] + inserted[:-1])
        if mids.size:
            j = np.searchsorted(pieces[:, 0], mids, side="right") - 1
            ok = (j >= 0) & (mids <= pieces[np.clip(j, 0, None), 1])
            mids = mids[ok]
        cand = np.concatenate([pieces[:, 0], pieces[:, 1], mids])
        k = np.searchsorted(inserted, cand)
        dl = np.abs(cand - inserted[np.clip(k - 1, 0, inserted.size - 1)])
        dr = np.abs(inserted[np.clip(k, 0, inserted.size - 1)] - cand)
        dist = np.minimum(dl, dr)
        best = int(np.argmax(dist))  # first maximiser: ties go to the smaller index
        if dist[best] <= 0:
            raise CardinalityError("domain cannot host enough distinct points")
        inserted = np.sort(np.append(inserted, cand[best]))
    return inserted


def _xi_preimage(E: EllipticModulus, dom: Domain) -> np.ndarray:
    """xi^{-1} of a domain inside [lam, 1], as sorted pieces of [0, 1]."""
    b = np.clip(dom.bounds, E.lam, 1.0)
    v = np.asarray(E.xi_inverse(b.ravel()), dtype=float).reshape(b.shape)
    v[0, 0] = 0.0
    v[-1, 1] = 1.0
    if dom.is_points:
        v[:, 1] = v[:, 0]
        v[-1, :] = 1.0
    return v


def initialize(pair: SeparatedPair, n: int) -> Equioscillator:
    if n < 1:
        raise ValueError("n must be >= 1")
    for dom in (pair.Xn, pair.Yn):
        if dom.cardinality < n + 1:
            raise CardinalityError(f"domain has {dom.cardinality} points, needs {n + 1}")
    E = EllipticModulus(pair.lam)
    a = _farthest_insertion(_xi_preimage(E, pair.Xn), n + 1)
    b = _farthest_insertion(_xi_preimage(E, pair.Yn.negated()), n + 1)
    xt = np.asarray(E.xi(0.5 * (a[1:] + a[:-1])), dtype=float)
    yt = -np.asarray(E.xi(0.5 * (b[1:] + b[:-1])), dtype=float)
    eq = Equioscillator(n, pair, np.atleast_1d(xt), np.atleast_1d(yt))
    refresh_extrema(eq)
    return eq


# -- extrema and residuals --------------------------------------------------

def refresh_extrema(eq: Equioscillator, check_unimodal: bool = False) -> Equioscillator:
    """Recompute extrema, residual logs, the balanced scale b, level a and spread."""
    lam = eq.pair.lam
    xt, yt = eq.xt, eq.yt
    lo = np.concatenate([[lam], xt])
    hi = np.concatenate([xt, [1.0]])
    x, c = slice_maxima(eq.pair.Xn, lo, hi, xt, yt, check_unimodal)
    ya = yt[::-1]
    lo = np.concatenate([[-1.0], ya])
    hi = np.concatenate([ya, [-lam]])
    y, d = slice_maxima(eq.pair.Yn, lo, hi, yt, xt, check_unimodal)
    eq.x, eq.c = x, c
    eq.y, eq.d = y[::-1], d[::-1]
    if not (np.all(np.isfinite(eq.c)) and np.all(np.isfinite(eq.d))):
        raise CoincidenceError("an extremum coincides with a root or pole", eq)
    Mc, Md = float(eq.c.max()), float(eq.d.max())
    eq.a = 0.5 * (Mc + Md)
    eq.b = 0.5 * (Md - Mc)
    eq.deviation = max(Mc - float(eq.c.min()), Md - float(eq.d.min()))
    return eq


def residual_logs(eq: Equioscillator):
    """c_i = sum log|(x_i - xt_j)/(x_i - yt_j)|, d_i = sum log|(y_i - yt_j)/(y_i - xt_j)|."""
    c = log_abs_ratio(eq.x, eq.xt, eq.yt)
    d = log_abs_ratio(eq.y, eq.yt, eq.xt)
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(d))):
        raise CoincidenceError("an extremum coincides with a root or pole", eq)
    return c, d


def spread(eq: Equioscillator) -> float:
    """Max minus min of {log|h(x_i)|, -log|h(y_i)|} at the balancing b."""
    return eq.deviation


# -- closed-form correction -------------------------------------------------

def _log_prod(diff: np.ndarray):
    """Row-wise log|prod| and sign of prod over the last axis."""
    if np.any(diff == 0):
        raise DegenerateGeometryError("vanishing difference in the Cauchy formula")
    return (np.sum(np.log(np.abs(diff)), axis=-1),
            np.where(np.count_nonzero(diff < 0, axis=-1) % 2, -1.0, 1.0))


def _off_diag(v: np.ndarray) -> np.ndarray:
    """Matrix of v_i - v_j with the diagonal removed, shape (k, k - 1)."""
    k = v.size
    D = v[:, None] - v[None, :]
    return D[~np.eye(k, dtype=bool)].reshape(k, k - 1)


def correction_step(eq: Equioscillator):
    """Solve the linearised equioscillation system by the Cauchy determinant formula.

    Returns ``(a, b, dxt, dyt)``.
    """
    x, y, xt, yt = eq.x, eq.y, eq.xt, eq.yt
    c, d = residual_logs(eq)
    z = np.concatenate([x, y])
    r = np.concatenate([c, d])
    sig = np.concatenate([np.ones_like(x), -np.ones_like(y)])
    w = np.concatenate([xt, yt])
    eps = np.concatenate([np.ones_like(xt), -np.ones_like(yt)])

    lnum, snum = _log_prod(z[:, None] - w[None, :])
    lden, sden = _log_prod(_off_diag(z))
    logW = lnum - lden
    M = float(logW.max())
    wk = sig * snum * sden * np.exp(logW - M)  # p_i, q_i scaled by exp(-M)

    a = float(np.dot(r, wk) / wk.sum())
    Sb = float(np.dot(z * (a - r), wk))
    b = math.copysign(math.exp(math.log(abs(Sb)) + M), Sb) if Sb != 0 else 0.0

    lpn, spn = _log_prod(w[:, None] - z[None, :])
    lpd, spd = _log_prod(_off_diag(w))
    diffs = w[:, None] - z[None, :]
    S = (wk * (r - a) / diffs).sum(axis=1)
    with np.errstate(divide="ignore"):
        logmag = lpn - lpd + M + np.log(np.abs(S))
    delta = eps * spn * spd * np.sign(S) * np.exp(logmag)
    n = xt.size
    return a, b, delta[:n], delta[n:]


def linear_system(eq: Equioscillator):
    """Dense form of the linearised system (matrix, rhs) for checking."""
    x, y, xt, yt = eq.x, eq.y, eq.xt, eq.yt
    c, d = residual_logs(eq)
    one = np.ones((x.size, 1))
    C = lambda p, q: 1.0 / (p[:, None] - q[None, :])
    top = np.hstack([one, -one, C(x, xt), -C(x, yt)])
    bot = np.hstack([one, one, -C(y, xt), C(y, yt)])
    return np.vstack([top, bot]), np.concatenate([c, d])


# -- line search in the logistic coordinates -------------------------------

def _logistic_update(left, right, node, dnode, alpha):
    """Move node inside (left, right) along the s-direction by alpha."""
    w = right - left
    u = node - left
    v = right - node
    s = np.log(u / v)
    ds = dnode * (1.0 / u + 1.0 / v)  # = dnode * w / (u v), without underflow
    sp = s + alpha * ds
    # left + w * expit(sp), written to keep whichever end is near
    e = np.exp(-np.abs(sp))
    frac_near = e / (1.0 + e)
    return np.where(sp >= 0, right - w * frac_near, left + w * frac_near)


def _trial(eq: Equioscillator, dxt, dyt, alpha, check_unimodal=False):
    t = eq.copy()
    t.xt = _logistic_update(eq.x[:-1], eq.x[1:], eq.xt, dxt, alpha)
    # poles: s-coordinate measured from y_{i+1} (lower) to y_i (upper)
    t.yt = _logistic_update(eq.y[1:], eq.y[:-1], eq.yt, dyt, alpha)
    try:
        refresh_extrema(t, check_unimodal)
    except (CoincidenceError, DegenerateGeometryError, EmptySliceError):
        t.deviation = math.inf
    if not (np.all(np.diff(t.xt) > 0) and np.all(np.diff(t.yt) < 0)):
        t.deviation = math.inf
    return t


def _golden(f, lo, hi, tol):
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)


def line_search_st(eq: Equioscillator, dxt, dyt, tol: float = 1e-3, check_unimodal=False,
                   max_shrink: int = 6):
    """Step length along the correction, chosen by golden section over [0, 1].

    Returns ``(alpha, trial_state)``; raises StagnationError when no alpha
    improves on alpha = 0.
    """
    cache = {}

    def f(al):
        if al not in cache:
            cache[al] = _trial(eq, dxt, dyt, al, check_unimodal)
        return cache[al].deviation

    # the full step is accepted outright when it at least halves the spread
    # (the Newton regime); otherwise fall back to golden section
    if f(1.0) <= 0.5 * eq.deviation:
        return 1.0, cache[1.0]
    top = 1.0
    for _ in range(max_shrink + 1):
        _golden(f, 0.0, top, tol * top)
        alpha = min(cache, key=lambda k: (cache[k].deviation, -k))
        if cache[alpha].deviation < eq.deviation:
            return alpha, cache[alpha]
        # the spread need not be unimodal in alpha (extrema can jump between
        # points of a discrete set): retry on a shorter bracket
        top *= 0.25
    raise StagnationError("spread can no longer be decreased", eq)


# -- driver -----------------------------------------------------------------

def _covering_state(pair: SeparatedPair, n: int) -> Equioscillator:
    Xn, Yn = pair.Xn, pair.Yn
    base = zolotarev_nodes(n, pair.lam)
    xt, yt = base.roots.copy(), base.poles.copy()
    if Xn.cardinality <= n:
        p = Xn.bounds[:, 0]
        xt = np.concatenate([p, np.full(n - p.size, p[-1])])
    if Yn.cardinality <= n:
        p = Yn.bounds[::-1, 0]
        yt = np.concatenate([p, np.full(n - p.size, p[-1])])
    eq = Equioscillator(n, pair, xt, yt, covering=True)
    if Xn.cardinality <= n:
        p = pair.X.bounds[:, 0]
        eq.exact_roots = np.concatenate([p, np.full(n - p.size, p[-1])])
    if Yn.cardinality <= n:
        p = pair.Y.bounds[:, 0]
        eq.exact_poles = np.concatenate([p, np.full(n - p.size, p[-1])])
    eq.a, eq.deviation = -math.inf, 0.0
    return eq


def certify(eq: Equioscillator, tol: float = 1e-8) -> bool:
    """Check the equioscillation characterisation of the optimum."""
    if eq.covering:
        return True
    if eq.x is None or eq.y is None:
        return False
    scale = max(1.0, abs(eq.a))
    vx, vy = eq.values()
    level_ok = (np.all(np.abs(vx - eq.a) <= tol * scale)
                and np.all(np.abs(vy - eq.a) <= tol * scale))
    order_ok = (np.all(eq.x[:-1] < eq.xt) and np.all(eq.xt < eq.x[1:])
                and np.all(eq.y[:-1] > eq.yt) and np.all(eq.yt > eq.y[1:]))
    member_ok = bool(np.all(eq.pair.Xn.contains(eq.x, 1e-15))
                     and np.all(eq.pair.Yn.contains(eq.y, 1e-15)))
    return bool(level_ok and order_ok and member_ok)


def initialize_analytic(pair: SeparatedPair, n: int) -> Equioscillator:
    """Start from the closed-form roots and poles of the bounding intervals."""
    sol = zolotarev_nodes(n, pair.lam)
    eq = Equioscillator(n, pair, sol.roots.copy(), sol.poles.copy())
    refresh_extrema(eq)
    return eq


def _iterate(eq: Equioscillator, opts: SolveOptions):
    alphas, spreads = [], [eq.deviation]
    termination = "max_iter"
    for _ in range(opts.max_iter):
        if eq.deviation <= opts.floor_tol * max(1.0, abs(eq.a)):
            termination = "floor"
            break
        try:
            _, _, dxt, dyt = correction_step(eq)
            if not (np.all(np.isfinite(dxt)) and np.all(np.isfinite(dyt))):
                raise DegenerateGeometryError("non-finite correction", eq)
            alpha, eq_new = line_search_st(eq, dxt, dyt, opts.alpha_tol, opts.check_unimodal)
        except (StagnationError, DegenerateGeometryError, CoincidenceError):
            termination = "stagnation"
            break
        eq = eq_new
        alphas.append(alpha)
        spreads.append(eq.deviation)
    report = SolveReport(eq.log_Zn, len(alphas), eq.deviation, certify(eq, opts.certify_tol),
                         tuple(alphas), tuple(spreads), termination)
    if termination == "max_iter":
        raise MaxIterError(f"no convergence in {opts.max_iter} iterations", eq, report)
    if eq.deviation > opts.stagnation_tol * max(1.0, abs(eq.a)):
        raise StagnationError(f"stagnated at spread {eq.deviation:.3e}", eq, report)
    return eq, report


def solve(pair: SeparatedPair, n: int, opts: SolveOptions | None = None):
    """Minimise the Zolotarev objective; returns ``(Equioscillator, SolveReport)``.

    The starting point is chosen by ``opts.init``; when it fails and
    ``opts.fallback`` is set, the iteration is restarted once from the
    other starting point.
    """
    opts = opts or SolveOptions()
    if n < 1:
        raise ValueError("n must be >= 1")
    if min(pair.Xn.cardinality, pair.Yn.cardinality) <= n:
        eq = _covering_state(pair, n)
        return eq, SolveReport(-math.inf, 0, 0.0, True, termination="covering")
    starts = []
    for kind in ("farthest", "analytic"):
        if kind != opts.init and opts.init != "best" and not opts.fallback:
            continue
        try:
            eq = initialize(pair, n) if kind == "farthest" else initialize_analytic(pair, n)
        except (CoincidenceError, EmptySliceError):
            continue
        starts.append((kind, eq))
    if opts.init == "best":
        starts.sort(key=lambda ke: ke[1].deviation)
    elif opts.init == "analytic":
        starts.reverse()
    if not starts:
        raise CardinalityError("no admissible starting point")
    if not opts.fallback:
        starts = starts[:1]
    first = None
    for _, eq in starts:
        try:
            return _iterate(eq, opts)
        except (StagnationError, MaxIterError) as e:
            first = first or e
    raise first


def solve_log_zn(pair: SeparatedPair, n: int, opts: SolveOptions | None = None) -> float:
    return solve(pair, n, opts)[1].log_Zn
