"""Real domains, their separation check, and Moebius normalisation.

A domain is either a finite union of closed intervals or a finite point set.
Point sets are stored as degenerate intervals ``[p, p]`` so that a single
code path (sorted ``(m, 2)`` bounds + binary search) serves both kinds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class SeparationError(ValueError):
    """max X > min X > max Y > min Y is violated."""


class DegenerateError(ValueError):
    """X or Y collapses to a single point."""


class PoleError(ZeroDivisionError):
    """Evaluation too close to a pole."""


class EmptySliceError(RuntimeError):
    """A maximisation slice between consecutive roots holds no domain point."""


class Kind(str, Enum):
    INTERVALS = "intervals"
    POINTS = "points"


@dataclass(frozen=True)
class Domain:
    kind: Kind
    bounds: np.ndarray  # (m, 2), sorted, disjoint; rows [p, p] for point sets

    def __post_init__(self):
        b = np.array(self.bounds, dtype=float).reshape(-1, 2)
        if b.shape[0] == 0:
            raise ValueError("domain is empty")
        if not np.all(np.isfinite(b)):
            raise ValueError("domain bounds must be finite")
        if np.any(b[:, 0] > b[:, 1]):
            raise ValueError("interval with a > b")
        if np.any(b[1:, 0] <= b[:-1, 1]):
            raise ValueError("intervals/points must be strictly increasing and disjoint")
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "kind", Kind(self.kind))

    @classmethod
    def intervals(cls, pairs) -> "Domain":
        return cls(Kind.INTERVALS, np.asarray(pairs, dtype=float).reshape(-1, 2))

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        return cls.intervals([[a, b]])

    @classmethod
    def points(cls, pts, sort: bool = True) -> "Domain":
        p = np.asarray(pts, dtype=float).ravel()
        if sort:
            p = np.unique(p)
        return cls(Kind.POINTS, np.column_stack([p, p]))

    @property
    def is_points(self) -> bool:
        return self.kind is Kind.POINTS

    @property
    def point_values(self) -> np.ndarray:
        if not self.is_points:
            raise TypeError("not a point set")
        return self.bounds[:, 0]

    @property
    def lo(self) -> float:
        return float(self.bounds[0, 0])

    @property
    def hi(self) -> float:
        return float(self.bounds[-1, 1])

    @property
    def cardinality(self) -> float:
        """Number of elements; ``inf`` once any interval has positive length."""
        if np.any(self.bounds[:, 1] > self.bounds[:, 0]):
            return math.inf
        return self.bounds.shape[0]

    def contains(self, z, atol: float = 0.0):
        z = np.asarray(z, dtype=float)
        i = np.searchsorted(self.bounds[:, 0], z + atol, side="right") - 1
        ok = i >= 0
        ic = np.clip(i, 0, None)
        return ok & (z <= self.bounds[ic, 1] + atol)

    def mapped(self, f, lo=None, hi=None) -> "Domain":
        """Image under an increasing map, optionally snapping the extreme ends."""
        b = np.asarray(f(self.bounds), dtype=float).reshape(-1, 2)
        if self.is_points:
            b[:, 1] = b[:, 0]
        if lo is not None:
            b[0, 0] = lo
            if self.is_points:
                b[0, 1] = lo
        if hi is not None:
            b[-1, 1] = hi
            if self.is_points:
                b[-1, 0] = hi
        return Domain(self.kind, b)

    def negated(self) -> "Domain":
        return Domain(self.kind, -self.bounds[::-1, ::-1])

    def to_json(self) -> dict:
        if self.is_points:
            return {"points": self.bounds[:, 0].tolist()}
        return {"intervals": self.bounds.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Domain":
        if "points" in obj:
            pts = np.asarray(obj["points"], dtype=float)
            if pts.size > 1 and not (np.all(np.diff(pts) > 0) or np.all(np.diff(pts) < 0)):
                raise ValueError("points must be strictly monotone")
            return cls.points(pts)
        if "intervals" in obj:
            return cls.intervals(obj["intervals"])
        raise ValueError("domain object needs 'points' or 'intervals'")

    def __eq__(self, other):
        return (isinstance(other, Domain) and self.kind == other.kind
                and np.array_equal(self.bounds, other.bounds))

    def __hash__(self):
        return hash((self.kind, self.bounds.tobytes()))


@dataclass(frozen=True)
class MobiusMap:
    """z -> (a z + b) / (c z + d)."""

    a: float
    b: float
    c: float
    d: float
    pole_tol: float = 1e-300

    def __post_init__(self):
        if self.a * self.d - self.b * self.c == 0:
            raise ValueError("singular Moebius map")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        den = self.c * z + self.d
        if np.any(np.abs(den) <= self.pole_tol * max(abs(self.c), abs(self.d))):
            raise PoleError("Moebius map evaluated at its pole")
        out = (self.a * z + self.b) / den
        return out[()] if out.ndim == 0 else out

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a, self.pole_tol)

    def compose(self, inner: "MobiusMap") -> "MobiusMap":
        """self(inner(z))."""
        a, b, c, d = self.a, self.b, self.c, self.d
        A, B, C, D = inner.a, inner.b, inner.c, inner.d
        return MobiusMap(a * A + b * C, a * B + b * D, c * A + d * C, c * B + d * D)

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def affine(cls, alpha: float, beta: float) -> "MobiusMap":
        return cls(alpha, beta, 0.0, 1.0)


def mobius_apply(m: MobiusMap, z):
    return m(z)


def cross_ratio_lambda(xmin: float, xmax: float, ymin: float, ymax: float) -> float:
    """Gap parameter lam in (0, 1) of the pair [xmin, xmax], [ymin, ymax].

    Uses (sqrt(B) - sqrt(A))^2 = (B - A)^2 / (sqrt(A) + sqrt(B))^2 with
    B - A = (xmin - ymax)(xmax - ymin), so no difference of square roots is
    ever formed.
    """
    if not (xmax > xmin > ymax > ymin):
        raise SeparationError("need xmax > xmin > ymax > ymin")
    A = (xmax - xmin) * (ymax - ymin)
    B = (xmin - ymin) * (xmax - ymax)
    G = (xmin - ymax) * (xmax - ymin)
    s = math.sqrt(A) + math.sqrt(B)
    return G / s / s


def normalizing_map(xmin: float, xmax: float, ymin: float, ymax: float, lam: float) -> MobiusMap:
    """Map from the normalised pair [lam, 1], [-1, -lam] back to the original one."""
    l = lam
    # numerator/denominator of the map, collected by powers of z
    nz = (1 - l) * xmin * xmax - (1 + l) * ymax * xmax + 2 * l * ymax * xmin
    n0 = l * (1 - l) * xmin * xmax + l * (1 + l) * ymax * xmax - 2 * l * ymax * xmin
    dz = (1 - l) * ymax - (1 + l) * xmin + 2 * l * xmax
    d0 = l * (1 - l) * ymax + l * (1 + l) * xmin - 2 * l * xmax
    s = max(abs(nz), abs(n0), abs(dz), abs(d0))
    return MobiusMap(-nz / s, -n0 / s, dz / s, d0 / s)


@dataclass(frozen=True)
class SeparatedPair:
    X: Domain
    Y: Domain
    lam: float = field(init=False)
    inverse_map: MobiusMap = field(init=False)  # normalised -> original
    forward_map: MobiusMap = field(init=False)  # original -> normalised
    Xn: Domain = field(init=False)  # X in [lam, 1]
    Yn: Domain = field(init=False)  # Y in [-1, -lam]

    def __post_init__(self):
        X, Y = self.X, self.Y
        if X.hi == X.lo or Y.hi == Y.lo:
            raise DegenerateError("X and Y need max > min")
        if not (X.hi > X.lo > Y.hi > Y.lo):
            raise SeparationError(
                f"need max X > min X > max Y > min Y, got {X.hi}, {X.lo}, {Y.hi}, {Y.lo}")
        lam = cross_ratio_lambda(X.lo, X.hi, Y.lo, Y.hi)
        inv = normalizing_map(X.lo, X.hi, Y.lo, Y.hi, lam)
        fwd = inv.inverse()
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "inverse_map", inv)
        object.__setattr__(self, "forward_map", fwd)
        Xn = X.mapped(fwd, lo=lam, hi=1.0)
        Yn = Y.mapped(fwd, lo=-1.0, hi=-lam)
        object.__setattr__(self, "Xn", Xn)
        object.__setattr__(self, "Yn", Yn)

    @property
    def endpoints(self) -> tuple[float, float, float, float]:
        return self.X.lo, self.X.hi, self.Y.lo, self.Y.hi

    def bounding(self) -> "SeparatedPair":
        return SeparatedPair(Domain.interval(self.X.lo, self.X.hi),
                             Domain.interval(self.Y.lo, self.Y.hi))

    def to_json(self) -> dict:
        return {"X": self.X.to_json(), "Y": self.Y.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "SeparatedPair":
        return validate_pair(Domain.from_json(obj["X"]), Domain.from_json(obj["Y"]))

    @classmethod
    def symmetric(cls, lam: float) -> "SeparatedPair":
        return cls(Domain.interval(lam, 1.0), Domain.interval(-1.0, -lam))


def validate_pair(X: Domain, Y: Domain) -> SeparatedPair:
    return SeparatedPair(X, Y)


def load_pair(path) -> SeparatedPair:
    return SeparatedPair.from_json(json.loads(Path(path).read_text()))


# -- extremum search --------------------------------------------------------

def log_abs_ratio(z, zeros, poles):
    """sum log|z - zeros| - sum log|z - poles|, broadcast over z.

    A point that hits a zero gives -inf, which is the intended value.
    """
    z = np.asarray(z, dtype=float)[..., None]
    with np.errstate(divide="ignore"):
        return (np.sum(np.log(np.abs(z - zeros)), axis=-1)
                - np.sum(np.log(np.abs(z - poles)), axis=-1))


def _dlog(z, zeros, poles, scale=None):
    """Log-derivative g and scale**2 * g'; scaling keeps g' finite when
    nodes are 1e-200 apart and 1/d**2 would overflow."""
    z = z[:, None]
    rz = 1.0 / (z - zeros)
    rp = 1.0 / (z - poles)
    g = rz.sum(axis=1) - rp.sum(axis=1)
    if scale is not None:
        rz = rz * scale[:, None]
        rp = rp * scale[:, None]
    gp = -(rz * rz).sum(axis=1) + (rp * rp).sum(axis=1)
    return g, gp


def peak_locations(lo, hi, zeros, poles, maxiter: int = 100):
    """Maximiser of log|prod(z - zeros)/prod(z - poles)| on each [lo_k, hi_k].

    Assumes the function is unimodal on every bracket (no zero or pole
    strictly inside).  Endpoints may be zeros, where the function is -inf.
    Safeguarded Newton on the log-derivative, vectorised over brackets.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    zeros = np.asarray(zeros, dtype=float)
    poles = np.asarray(poles, dtype=float)
    out = np.empty_like(lo)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        glo, _ = _dlog(lo, zeros, poles)
        ghi, _ = _dlog(hi, zeros, poles)
    # a zero at the left end pushes the peak right, at the right end left;
    # 1/(+0) would otherwise give the wrong sign on the right
    glo = np.where(np.isnan(glo) | np.isin(lo, zeros), np.inf, glo)
    ghi = np.where(np.isnan(ghi) | np.isin(hi, zeros), -np.inf, ghi)
    at_lo = glo <= 0
    at_hi = ~at_lo & (ghi >= 0)
    out[at_lo] = lo[at_lo]
    out[at_hi] = hi[at_hi]
    act = np.flatnonzero(~at_lo & ~at_hi)
    if act.size:
        lo0, hi0 = lo[act], hi[act]
        a, b = lo0.copy(), hi0.copy()
        z = 0.5 * (a + b)
        for _ in range(maxiter):
            # Newton on G = g (z - lo)(hi - z), which stays bounded when the
            # bracket ends are zeros of the objective
            wl, wr = z - lo0, hi0 - z
            g, gp_w = _dlog(z, zeros, poles, np.sqrt(wl) * np.sqrt(wr))
            a = np.where(g > 0, z, a)
            b = np.where(g < 0, z, b)
            G = (g * wl) * wr
            Gp = gp_w + g * (wr - wl)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = G / Gp
            zn = z - step
            tiny = np.abs(step) <= 4e-16 * np.abs(z) + 1e-300
            bad = ~tiny & ~((zn >= a) & (zn <= b))
            zn = np.where(bad, 0.5 * (a + b), np.where(tiny, z, zn))
            done = tiny | (g == 0) | \
                   (b - a <= 4e-16 * np.maximum(np.abs(a), np.abs(b)))
            z = zn
            if np.all(done):
                break
        out[act] = z
    return out


def slice_maxima(domain: Domain, lo, hi, zeros, poles, check_unimodal: bool = False):
    """Maximise log|ratio| over domain ∩ [lo_k, hi_k] for every bracket k.

    Returns ``(argmax, value)`` arrays.  With a unimodal objective the
    maximum over a subset sits at the peak itself or at the nearest domain
    point on either side of it, so only those are evaluated.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if check_unimodal:
        assert_unimodal(lo, hi, zeros, poles)
    peak = peak_locations(lo, hi, zeros, poles)
    B = domain.bounds
    m = B.shape[0]
    i = np.searchsorted(B[:, 0], peak, side="right") - 1
    ic = np.clip(i, 0, m - 1)
    inside = (i >= 0) & (peak <= B[ic, 1])
    left = np.where(i >= 0, B[ic, 1], -np.inf)
    jr = np.clip(i + 1, 0, m - 1)
    right = np.where(i + 1 < m, B[jr, 0], np.inf)
    left_ok = ~inside & (left >= lo)
    right_ok = ~inside & (right <= hi)
    if np.any(~inside & ~left_ok & ~right_ok):
        raise EmptySliceError("maximisation slice is empty")
    with np.errstate(divide="ignore"):
        fl = np.where(left_ok, log_abs_ratio(np.where(left_ok, left, lo), zeros, poles), -np.inf)
        fr = np.where(right_ok, log_abs_ratio(np.where(right_ok, right, hi), zeros, poles), -np.inf)
        fp = np.where(inside, log_abs_ratio(peak, zeros, poles), -np.inf)
    arg = np.where(inside, peak, np.where(fl >= fr, left, right))
    val = np.where(inside, fp, np.maximum(fl, fr))
    return arg, val


def assert_unimodal(lo, hi, zeros, poles, samples: int = 32):
    """Sampling guard: the log-derivative changes sign at most once per bracket."""
    t = (np.arange(1, samples + 1) - 0.5) / samples
    for a, b in zip(np.atleast_1d(lo), np.atleast_1d(hi)):
        z = a + (b - a) * t
        g, _ = _dlog(z, zeros, poles)
        s = np.sign(g)
        s = s[s != 0]
        if np.count_nonzero(np.diff(s) != 0) > 1:
            raise AssertionError(f"objective not unimodal on [{a}, {b}]")


def max_abs_logh_on(domain: Domain, lo: float, hi: float, roots, poles, b: float = 0.0,
                    side: str = "x"):
    """Maximiser of log|h| on domain ∩ [lo, hi] (side 'x') or of -log|h| (side 'y').

    ``h(z) = exp(b) prod(z - roots) / prod(z - poles)``.
    """
    roots = np.asarray(roots, dtype=float)
    poles = np.asarray(poles, dtype=float)
    if side == "x":
        arg, val = slice_maxima(domain, [lo], [hi], roots, poles)
        return float(arg[0]), float(val[0]) + b
    if side == "y":
        arg, val = slice_maxima(domain, [lo], [hi], poles, roots)
        return float(arg[0]), float(val[0]) - b
    raise ValueError("side must be 'x' or 'y'")
