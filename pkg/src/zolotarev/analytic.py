"""Closed-form Zolotarev solutions on [lam, 1] x [-1, -lam] and bounds on Z_n."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domains import SeparatedPair, cross_ratio_lambda, normalizing_map
from .special import EllipticModulus, moduli_rho, log_rho_tilde

LOG_TINY = math.log(np.finfo(float).tiny)


class LambdaMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class AnalyticSolution:
    n: int
    lam: float
    roots: np.ndarray   # ascending, in (lam, 1)
    poles: np.ndarray   # = -roots, descending
    x: np.ndarray       # n + 1 extrema in X, ascending
    y: np.ndarray       # = -x, descending
    log_Zn: float

    @property
    def underflow(self) -> bool:
        return self.log_Zn < LOG_TINY

    @property
    def Zn(self) -> float:
        """Linear-scale value; saturates to 0 on underflow (see ``underflow``)."""
        return 0.0 if self.underflow else math.exp(self.log_Zn)

    @property
    def a(self) -> float:
        """Equioscillation level log sqrt(Z_n)."""
        return 0.5 * self.log_Zn


def _log_ratio_terms(E: EllipticModulus, v: np.ndarray) -> np.ndarray:
    """log((1 - xi)/(1 + xi)) at each v, accurate when xi is close to 1."""
    return np.log(E.one_minus_xi(v)) - np.log1p(E.xi(v))


def zolotarev_nodes(n: int, lam: float) -> AnalyticSolution:
    if n < 1:
        raise ValueError("n must be >= 1")
    E = EllipticModulus(lam)
    vr = (np.arange(1, n + 1) - 0.5) / n
    ve = np.arange(n + 1) / n
    roots = np.asarray(E.xi(vr), dtype=float)
    x = np.asarray(E.xi(ve), dtype=float)
    x[0], x[-1] = E.lam, 1.0
    log_Zn = 2.0 * float(np.sum(_log_ratio_terms(E, vr)))
    return AnalyticSolution(n, E.lam, roots, -roots, x, -x, log_Zn)


def zolotarev_number_log(n: int, lam: float) -> float:
    """log Z_n(lam) from the node product, summed as logs."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        EllipticModulus(lam)  # domain check
        return 0.0
    E = EllipticModulus(lam)
    vr = (np.arange(1, n + 1) - 0.5) / n
    return 2.0 * float(np.sum(_log_ratio_terms(E, vr)))


def zolotarev_bounds(n: int, lam: float) -> tuple[float, float, float, float]:
    """Logs of 4r/(1+r^2)^4 <= . <= 4r/(1+r^2)^2 <= 4r <= 4 rho~^(-2n), r = rho^(-2n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _, _, log_rho = moduli_rho(lam)
    base = math.log(4.0) - 2 * n * log_rho
    q = math.exp(-4 * n * log_rho)  # rho^(-4n), harmless if it underflows
    lower = base - 4.0 * math.log1p(q)
    upper = base - 2.0 * math.log1p(q)
    upper3 = math.log(4.0) - 2 * n * log_rho_tilde(lam)
    return lower, upper, base, upper3


def map_nodes_to_pair(sol: AnalyticSolution, pair_endpoints, tol: float = 1e-12):
    """Transport analytic nodes to [xmin, xmax] x [ymin, ymax].

    ``pair_endpoints`` is either a SeparatedPair or ``(xmin, xmax, ymin, ymax)``.
    Returns a dict of the mapped nodes and extrema, with order preserved.
    """
    if isinstance(pair_endpoints, SeparatedPair):
        xmin, xmax, ymin, ymax = pair_endpoints.endpoints
    else:
        xmin, xmax, ymin, ymax = map(float, pair_endpoints)
    lam = cross_ratio_lambda(xmin, xmax, ymin, ymax)
    if abs(lam - sol.lam) > tol * max(lam, sol.lam):
        raise LambdaMismatchError(f"pair has lam={lam!r}, solution has {sol.lam!r}")
    m = normalizing_map(xmin, xmax, ymin, ymax, lam)
    x = np.asarray(m(sol.x), dtype=float)
    y = np.asarray(m(sol.y), dtype=float)
    x[0], x[-1], y[0], y[-1] = xmin, xmax, ymax, ymin
    return {
        "roots": np.asarray(m(sol.roots), dtype=float),
        "poles": np.asarray(m(sol.poles), dtype=float),
        "x": x,
        "y": y,
        "log_Zn": sol.log_Zn,
    }


def nodes_for_pair(n: int, pair: SeparatedPair):
    """Analytic nodes of the bounding intervals of ``pair``, in original coordinates."""
    sol = zolotarev_nodes(n, pair.lam)
    return map_nodes_to_pair(sol, pair, tol=1e-9)
