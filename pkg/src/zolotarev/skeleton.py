"""Skeleton decompositions of the Cauchy kernel 1/(x - y) and their condition numbers.

With roots xt and poles yt, the rank-r skeleton approximation of 1/(x - y) is

    f(x)^T g(y) = C(x, yt) C(xt, yt)^{-1} C(xt, y),

and its pointwise relative error is h(x)/h(y) with
h(z) = prod(z - xt)/prod(z - yt).  The interpolation vectors

    u_i(x) = H(x) U_i / (x - xt_i),   H(x) = prod(x - xt)/prod(x - yt),

(and v, the same with the roles of xt and yt swapped) are evaluated with
the modified Lagrange formula; the z-independent parts U_i are stored as
log-magnitudes and signs so that clustered nodes do not overflow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .domains import Domain, EmptySliceError, PoleError, SeparatedPair, log_abs_ratio, slice_maxima

EULER_GAMMA = 0.5772156649015329
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class Form(str, Enum):
    RAW = "raw"
    LEFT = "left"
    RIGHT = "right"
    TWO_SIDED = "two_sided"


def _log_weights(nodes: np.ndarray, others: np.ndarray):
    """log|U_i| and sign(U_i) for U_i = prod_j (nodes_i - others_j) / prod_{k!=i} (nodes_i - nodes_k)."""
    r = nodes.size
    num = nodes[:, None] - others[None, :]
    den = nodes[:, None] - nodes[None, :]
    den[np.diag_indices(r)] = 1.0
    if np.any(num == 0) or np.any(den == 0):
        raise PoleError("coincident nodes")
    logw = np.log(np.abs(num)).sum(axis=1) - np.log(np.abs(den)).sum(axis=1)
    neg = np.count_nonzero(num < 0, axis=1) + np.count_nonzero(den < 0, axis=1)
    return logw, np.where(neg % 2, -1.0, 1.0)


def _interp(z, nodes, others, logw, sgn):
    """Rows u(z_k) for an array z, shape (len(z), r)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    r = nodes.size
    out = np.zeros((z.size, r))
    if r == 0:
        return out
    if np.any(z[:, None] == others[None, :]):
        raise PoleError("evaluation point coincides with an opposing node")
    dz = z[:, None] - nodes[None, :]
    hit = dz == 0
    on = hit.any(axis=1)
    if np.any(on):
        out[on] = hit[on].astype(float)
    off = ~on
    if np.any(off):
        dzo = dz[off]
        do = z[off, None] - others[None, :]
        logH = np.log(np.abs(dzo)).sum(axis=1) - np.log(np.abs(do)).sum(axis=1)
        negH = np.count_nonzero(dzo < 0, axis=1) + np.count_nonzero(do < 0, axis=1)
        sH = np.where(negH % 2, -1.0, 1.0)
        mag = np.exp(logH[:, None] + logw[None, :] - np.log(np.abs(dzo)))
        out[off] = (sH[:, None] * sgn[None, :]) * np.sign(dzo) * mag
    return out


@dataclass(frozen=True)
class SkeletonDecomposition:
    xt: np.ndarray
    yt: np.ndarray
    u_logw: np.ndarray
    u_sign: np.ndarray
    v_logw: np.ndarray
    v_sign: np.ndarray
    form: Form = Form.TWO_SIDED

    @property
    def r(self) -> int:
        return int(self.xt.size)

    @classmethod
    def from_nodes(cls, xt, yt, form: Form | str = Form.TWO_SIDED) -> "SkeletonDecomposition":
        xt = np.atleast_1d(np.asarray(xt, dtype=float))
        yt = np.atleast_1d(np.asarray(yt, dtype=float))
        if xt.size != yt.size:
            raise ValueError("need as many roots as poles")
        if np.any(xt[:, None] == yt[None, :]):
            raise PoleError("a root coincides with a pole")
        ul, us = _log_weights(xt, yt)
        vl, vs = _log_weights(yt, xt)
        return cls(xt, yt, ul, us, vl, vs, Form(form))

    @classmethod
    def from_solution(cls, eq, form: Form | str = Form.TWO_SIDED) -> "SkeletonDecomposition":
        """Decomposition in original coordinates from a solved Equioscillator."""
        return cls.from_nodes(eq.roots(), eq.poles(), form)

    def with_form(self, form: Form | str) -> "SkeletonDecomposition":
        return SkeletonDecomposition(self.xt, self.yt, self.u_logw, self.u_sign,
                                     self.v_logw, self.v_sign, Form(form))

    def to_json(self) -> str:
        return json.dumps({
            "form": self.form.value,
            "xt": self.xt.tolist(), "yt": self.yt.tolist(),
            "u_logw": self.u_logw.tolist(), "u_sign": self.u_sign.tolist(),
            "v_logw": self.v_logw.tolist(), "v_sign": self.v_sign.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "SkeletonDecomposition":
        d = json.loads(text)
        arr = lambda k: np.asarray(d[k], dtype=float)
        return cls(arr("xt"), arr("yt"), arr("u_logw"), arr("u_sign"),
                   arr("v_logw"), arr("v_sign"), Form(d["form"]))


def eval_interp(dec: SkeletonDecomposition, side: str, z):
    """u(z) (side 'u') or v(z) (side 'v').  Scalar z gives a vector of length r."""
    scalar = np.ndim(z) == 0
    if side == "u":
        out = _interp(z, dec.xt, dec.yt, dec.u_logw, dec.u_sign)
    elif side == "v":
        out = _interp(z, dec.yt, dec.xt, dec.v_logw, dec.v_sign)
    else:
        raise ValueError("side must be 'u' or 'v'")
    return out[0] if scalar else out


def cauchy(x, y) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = x[:, None] - y[None, :]
    if np.any(d == 0):
        raise PoleError("x_i == y_j in Cauchy matrix")
    return 1.0 / d


def cauchy_inverse(dec: SkeletonDecomposition) -> np.ndarray:
    """C(xt, yt)^{-1} from the explicit formula (entries may overflow for large r)."""
    xt, yt = dec.xt, dec.yt
    # residue of v_i(y) at y = xt_k
    lnum = np.log(np.abs(xt[:, None] - yt[None, :])).sum(axis=1)
    snum = np.where(np.count_nonzero(xt[:, None] - yt[None, :] < 0, axis=1) % 2, -1.0, 1.0)
    dd = xt[None, :] - xt[:, None]  # dd[k, j] = xt_j - xt_k
    np.fill_diagonal(dd, 1.0)
    lden = np.log(np.abs(dd)).sum(axis=1)
    sden = np.where(np.count_nonzero(dd < 0, axis=1) % 2, -1.0, 1.0)
    diff = xt[None, :] - yt[:, None]  # [i, k] = xt_k - yt_i
    with np.errstate(over="ignore"):
        mag = np.exp(dec.v_logw[:, None] + (lnum - lden)[None, :] - np.log(np.abs(diff)))
    return dec.v_sign[:, None] * (snum * sden)[None, :] * np.sign(diff) * mag


def reconstruct(dec: SkeletonDecomposition, x, y, form: Form | str | None = None):
    """f(x)^T g(y), the rank-r approximation of 1/(x - y), by the selected form.

    Broadcasts over 1-d arrays x and y to a matrix; scalars give a scalar.
    """
    form = Form(form) if form is not None else dec.form
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(x[:, None] == y[None, :]):
        raise PoleError("x == y")
    if dec.r == 0:
        out = np.zeros((x.size, y.size))
    elif form is Form.LEFT:
        out = eval_interp(dec, "u", x) @ cauchy(dec.xt, y)
    elif form is Form.RIGHT:
        out = cauchy(x, dec.yt) @ eval_interp(dec, "v", y).T
    elif form is Form.TWO_SIDED:
        out = eval_interp(dec, "u", x) @ cauchy(dec.xt, dec.yt) @ eval_interp(dec, "v", y).T
    else:  # unstable: diagnostics only
        out = cauchy(x, dec.yt) @ cauchy_inverse(dec) @ cauchy(dec.xt, y)
    return float(out[0, 0]) if scalar else out


def relative_error(dec: SkeletonDecomposition, x, y, form: Form | str | None = None):
    """|1 - (x - y) f(x)^T g(y)| evaluated through the chosen form (cancels near rounding)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return np.abs(1.0 - (x[:, None] - y[None, :]) * reconstruct(dec, x, y, form))


def log_error_factors(dec: SkeletonDecomposition, x, y):
    """log|h(x)| and -log|h(y)|: the error is the product exp(.) exp(.), exactly."""
    return log_abs_ratio(np.atleast_1d(x), dec.xt, dec.yt), log_abs_ratio(np.atleast_1d(y), dec.yt, dec.xt)


def _grid(dom: Domain, density: int) -> np.ndarray:
    if dom.is_points:
        return dom.point_values
    k = np.arange(density)
    t = 0.5 - 0.5 * np.cos(np.pi * k / max(density - 1, 1))
    lo, hi = dom.bounds[:, :1], dom.bounds[:, 1:]
    return np.unique((lo + (hi - lo) * t[None, :]).ravel())


def _side_maxima(dom: Domain, zeros, poles, grid_density: int):
    """Grid values and refined per-gap maxima of log|prod(z - zeros)/prod(z - poles)|."""
    g = _grid(dom, grid_density)
    with np.errstate(divide="ignore"):
        gv = log_abs_ratio(g, zeros, poles)
    # refine: one unimodal bracket between consecutive zeros inside the hull
    z = np.sort(zeros[(zeros > dom.lo) & (zeros < dom.hi)])
    lo = np.concatenate([[dom.lo], z])
    hi = np.concatenate([z, [dom.hi]])
    keep = lo < hi
    vals = np.array([])
    if np.any(keep):
        try:
            _, vals = slice_maxima(dom, lo[keep], hi[keep], zeros, poles)
        except EmptySliceError:
            vals = np.array([])
    return gv, vals


def max_relative_error(dec: SkeletonDecomposition, pair: SeparatedPair, grid_density: int = 256,
                       log: bool = False):
    """max over X x Y of |1 - (x - y) f(x)^T g(y)|.

    Evaluated through the exact factorisation h(x)/h(y) of the error, which
    separates into max_X |h| times max_Y 1/|h|; a Chebyshev-density grid per
    subinterval is refined by a peak search between consecutive roots/poles.
    """
    if dec.r == 0:
        return 0.0 if log else 1.0
    gx, rx = _side_maxima(pair.X, dec.xt, dec.yt, grid_density)
    gy, ry = _side_maxima(pair.Y, dec.yt, dec.xt, grid_density)
    mx = max(np.max(gx), np.max(rx) if rx.size else -np.inf)
    my = max(np.max(gy), np.max(ry) if ry.size else -np.inf)
    val = mx + my
    if log:
        return val
    return 0.0 if val == -np.inf else math.exp(val)


def extremal_pair_count(dec: SkeletonDecomposition, pair: SeparatedPair, rtol: float = 1e-6) -> int:
    """Number of (x, y) pairs of local extrema at which the error is within rtol of its max."""
    _, rx = _side_maxima(pair.X, dec.xt, dec.yt, 2)
    _, ry = _side_maxima(pair.Y, dec.yt, dec.xt, 2)
    cx = np.count_nonzero(rx >= rx.max() + math.log1p(-rtol))
    cy = np.count_nonzero(ry >= ry.max() + math.log1p(-rtol))
    return int(cx * cy)


# -- condition numbers ------------------------------------------------------

def _kappa_fn(z, nodes, others, logw, sgn, ends):
    """sum_i |u_i(z)| max_e |(z - e)/(nodes_i - e)| for an array z (Lebesgue-type function)."""
    U = np.abs(_interp(z, nodes, others, logw, sgn))
    ratio = np.abs((z[:, None, None] - ends[None, None, :]) / (nodes[None, :, None] - ends[None, None, :]))
    return (U * ratio.max(axis=2)).sum(axis=1)


def _kappa_side(dom: Domain, other: Domain, nodes, others, logw, sgn,
                samples: int = 12, golden_iters: int = 40) -> float:
    r = nodes.size
    if r == 0:
        return 0.0
    ends = np.unique(other.bounds.ravel())
    if dom.is_points:
        return float(_kappa_fn(dom.point_values, nodes, others, logw, sgn, ends).max())
    # brackets: domain pieces cut at the nodes
    cuts = np.sort(nodes)
    lo_list, hi_list = [], []
    for a, b in dom.bounds:
        inner = cuts[(cuts > a) & (cuts < b)]
        pts = np.concatenate([[a], inner, [b]])
        lo_list.append(pts[:-1])
        hi_list.append(pts[1:])
    lo = np.concatenate(lo_list)
    hi = np.concatenate(hi_list)
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    f = lambda z: _kappa_fn(z, nodes, others, logw, sgn, ends)
    t = np.linspace(0.0, 1.0, samples)
    Z = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    F = f(Z.ravel()).reshape(Z.shape)
    best = F.max()
    # golden refinement around the best sample of every bracket
    j = np.argmax(F, axis=1)
    a = Z[np.arange(Z.shape[0]), np.clip(j - 1, 0, samples - 1)]
    b = Z[np.arange(Z.shape[0]), np.clip(j + 1, 0, samples - 1)]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(golden_iters):
        left = fc >= fd  # maximum lies in [a, d]
        a, b = np.where(left, a, c), np.where(left, d, b)
        keep = np.where(left, c, d)
        fkeep = np.where(left, fc, fd)
        new = np.where(left, b - GOLDEN * (b - a), a + GOLDEN * (b - a))
        fnew = f(new)
        c, fc = np.where(left, new, keep), np.where(left, fnew, fkeep)
        d, fd = np.where(left, keep, new), np.where(left, fkeep, fnew)
    return float(max(best, fc.max(), fd.max()))


def kappa(dec: SkeletonDecomposition, pair: SeparatedPair) -> tuple[float, float]:
    """(kappa_r(X, Y), kappa_r(Y, X)) of the interpolative forms."""
    kxy = _kappa_side(pair.X, pair.Y, dec.xt, dec.yt, dec.u_logw, dec.u_sign)
    kyx = _kappa_side(pair.Y, pair.X, dec.yt, dec.xt, dec.v_logw, dec.v_sign)
    return kxy, kyx


def kappa_asymptote(r: int) -> float:
    """Large-r asymptote of the Chebyshev-node Lebesgue constant."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return (2.0 / math.pi) * (EULER_GAMMA + math.log(8.0 / math.pi) + math.log(r))


def kappa_fit(lam: float) -> float:
    """Empirical large-r offset 0.305 (log lam)^2 / (5.88 - log lam)."""
    L = math.log(lam)
    return 0.305 * L * L / (5.88 - L)


def analytic_decomposition(r: int, lam: float, form: Form | str = Form.TWO_SIDED):
    """Decomposition from the closed-form nodes on [lam, 1] x [-1, -lam]."""
    from .analytic import zolotarev_nodes
    sol = zolotarev_nodes(r, lam)
    return SkeletonDecomposition.from_nodes(sol.roots, sol.poles, form)
