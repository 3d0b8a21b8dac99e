"""Jacobi elliptic primitives parametrised by the complementary modulus.

Everything here is keyed on ``lam`` = k', the complementary modulus, with
k = sqrt(1 - lam**2) never formed by subtraction from 1.  This keeps the
node map ``xi`` accurate for ``lam`` down to about 1e-300, where 1 - lam**2
rounds to 1.

``dn`` is evaluated by ascending Landen transformations: each ascent squares
the complementary modulus, and once it drops below ``LANDEN_THRESHOLD`` the
hyperbolic limit (with its first-order correction) is exact to rounding.
The reconstruction ``dn = (1 + k)/2 * (d + k'/d)`` only adds positive terms,
so relative accuracy survives all the way back up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EPS = np.finfo(float).eps
LANDEN_THRESHOLD = 1e-8
_AGM_MAXITER = 64


class DomainError(ValueError):
    """Argument outside the domain of an elliptic primitive."""


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 < lam < 1.0):
        raise DomainError(f"complementary modulus must lie in (0, 1), got {lam!r}")
    return lam


def _complement(lam: float) -> float:
    # sqrt(1 - lam^2) without cancellation: 1 - lam is exact for lam >= 1/2
    return math.sqrt((1.0 - lam) * (1.0 + lam))


def agm(a: float, b: float) -> tuple[float, int]:
    """Arithmetic-geometric mean of two positive numbers and the iteration count."""
    if a <= 0 or b <= 0:
        raise DomainError("agm needs positive arguments")
    for it in range(1, _AGM_MAXITER + 1):
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        if abs(a - b) <= 2 * EPS * a:
            return 0.5 * (a + b), it
    raise RuntimeError("agm failed to converge")  # pragma: no cover


def _quarter_period(kp: float) -> tuple[float, int]:
    """K(k) for complementary modulus kp, with the iteration count used."""
    if kp < LANDEN_THRESHOLD:
        # log singularity at k -> 1; the next term is O(kp^4 log kp)
        L = math.log(4.0) - math.log(kp)
        return L + 0.25 * kp * kp * (L - 1.0), 0
    m, it = agm(1.0, kp)
    return math.pi / (2.0 * m), it


def complete_K(lam: float) -> tuple[float, float]:
    """Return ``(K(lam), K'(lam))``.

    ``K'(lam) = K(sqrt(1 - lam**2))`` is computed straight from ``lam``,
    so it stays accurate when ``lam`` is tiny.
    """
    lam = _check_lambda(lam)
    K, _ = _quarter_period(_complement(lam))
    Kp, _ = _quarter_period(lam)
    return K, Kp


def agm_iterations(lam: float) -> int:
    """Iterations the AGM needs for ``K'(lam)`` (0 when the series is used)."""
    return _quarter_period(_check_lambda(lam))[1]


@dataclass(frozen=True)
class EllipticModulus:
    """Modulus pair (k, k') carried through k' = lam.

    ``K`` here is the quarter period of the modulus k, i.e. ``K'(lam)`` in
    the lam-parametrisation; that is the period the node map needs.
    """

    lam: float
    extra_ascents: int = 0
    log_lambda: float = field(init=False)
    K: float = field(init=False)
    _levels: tuple = field(init=False, repr=False)

    def __post_init__(self):
        lam = _check_lambda(self.lam)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "log_lambda", math.log(lam))
        object.__setattr__(self, "K", _quarter_period(lam)[0])
        object.__setattr__(self, "_levels", _landen_levels(lam, self.extra_ascents))

    @property
    def k(self) -> float:
        return _complement(self.lam)

    @property
    def n_ascents(self) -> int:
        return len(self._levels) - 1

    def dn(self, u):
        """dn(u, k) for u in [0, K]."""
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u > self.K * (1 + 4 * EPS)):
            raise DomainError("dn argument outside [0, K]")
        u = np.minimum(u, self.K)
        half = u <= 0.5 * self.K
        out = np.empty_like(u)
        out[half] = _dn_lower_half(u[half], self._levels)
        # dn(K - w) = k' / dn(w)
        w = self.K - u[~half]
        out[~half] = self.lam / _dn_lower_half(w, self._levels)
        return out[()] if out.ndim == 0 else out

    def log_xi(self, v):
        v = _check_unit(v)
        out = np.empty_like(v)
        upper = v >= 0.5  # argument (1 - v) K lies in the lower half
        out[upper] = np.log(_dn_lower_half((1.0 - v[upper]) * self.K, self._levels))
        out[~upper] = self.log_lambda - np.log(
            _dn_lower_half(v[~upper] * self.K, self._levels))
        return out[()] if out.ndim == 0 else out

    def xi(self, v):
        v = _check_unit(v)
        out = np.empty_like(v)
        upper = v >= 0.5
        out[upper] = _dn_lower_half((1.0 - v[upper]) * self.K, self._levels)
        out[~upper] = self.lam / _dn_lower_half(v[~upper] * self.K, self._levels)
        return out[()] if out.ndim == 0 else out

    def one_minus_xi(self, v):
        """1 - xi(v) without cancellation near v = 1."""
        v = _check_unit(v)
        z = np.asarray(self.xi(v), dtype=float)
        out = np.asarray(1.0 - z, dtype=float)
        near = z > 0.5  # plain subtraction is exact enough below this
        upper = near & (v >= 0.5)
        lower = near & (v < 0.5)
        out[upper] = _one_minus_dn_lower_half((1.0 - v[upper]) * self.K, self.lam)
        e = _one_minus_dn_lower_half(v[lower] * self.K, self.lam)
        # 1 - lam/(1 - e) = ((1 - lam) - e)/(1 - e); e <= (1 - lam)/2 here
        out[lower] = ((1.0 - self.lam) - e) / (1.0 - e)
        return out[()] if out.ndim == 0 else out

    def dxi_dv(self, v):
        """Derivative of xi in v, from dn' = -k^2 sn cn written through dn."""
        z = np.asarray(self.xi(v), dtype=float)
        return self.K * z * _sn_cn_factor(z, self.lam)

    def xi_inverse(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < self.lam * (1 - 4 * EPS)) or np.any(z > 1 + 4 * EPS):
            raise DomainError("xi_inverse argument outside [lam, 1]")
        logz = np.log(np.clip(z, self.lam, 1.0))
        return self.xi_inverse_log(logz)

    def xi_inverse_log(self, logz):
        """Invert ``log_xi``: the v in [0, 1] with log xi(v) = logz."""
        logz = np.asarray(logz, dtype=float)
        if np.any(logz > 4 * EPS) or np.any(logz < self.log_lambda * (1 + 4 * EPS) - 4 * EPS):
            raise DomainError("xi_inverse argument outside [lam, 1]")
        flat = self._invert(logz.ravel())
        out = flat.reshape(logz.shape)
        return out[()] if out.ndim == 0 else out

    def _invert(self, t: np.ndarray, maxiter: int = 200) -> np.ndarray:
        """Safeguarded Newton on log xi(v) = t, vectorised over t."""
        v = np.where(t >= 0.0, 1.0, 0.0)
        act = np.flatnonzero((t < 0.0) & (t > self.log_lambda))
        if act.size == 0:
            return v
        tt = t[act]
        lo = np.zeros_like(tt)
        hi = np.ones_like(tt)
        # log xi is linear in v in the small-lam limit: a good first guess
        w = np.clip(1.0 - tt / self.log_lambda, 0.0, 1.0)
        done = np.zeros(tt.shape, dtype=bool)
        for _ in range(maxiter):
            f = self.log_xi(w) - tt
            lo = np.where(f < 0, w, lo)
            hi = np.where(f > 0, w, hi)
            z = self.xi(w)
            slope = self.K * _sn_cn_factor(z, self.lam)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(slope > 0, f / slope, np.inf)
            w_new = w - step
            tiny = np.abs(step) <= 2 * EPS * np.maximum(np.abs(w), 1e-300)
            bad = ~((w_new > lo) & (w_new < hi))
            w_new = np.where(bad, 0.5 * (lo + hi), w_new)
            fin = (f == 0.0) | (hi - lo <= 4 * EPS * np.maximum(hi, 1e-300)) | (tiny & ~bad)
            w = np.where(done | (f == 0.0), w, w_new)
            done |= fin
            if np.all(done):
                break
        v[act] = w
        return v


def _check_unit(v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0) or np.any(v > 1) or np.any(np.isnan(v)):
        raise DomainError("xi argument must lie in [0, 1]")
    return v.copy()


def _sn_cn_factor(z, lam):
    # k^2 sn cn / dn = sqrt((1 - dn^2)(1 - (k'/dn)^2)), written to avoid dn^2 underflow
    z = np.asarray(z, dtype=float)
    r = lam / z
    return np.sqrt(np.maximum((1.0 - z) * (1.0 + z), 0.0) * np.maximum((1.0 - r) * (1.0 + r), 0.0))


def _landen_levels(lam: float, extra: int = 0):
    """Sequence of (k, k') pairs under ascending Landen steps."""
    k, kp = _complement(lam), lam
    levels = [(k, kp)]
    ascents_left = extra
    while kp >= LANDEN_THRESHOLD or ascents_left > 0:
        if kp < LANDEN_THRESHOLD:
            ascents_left -= 1
        kp = (kp / (1.0 + k)) ** 2
        k = 2.0 * math.sqrt(k) / (1.0 + k)
        levels.append((k, kp))
        if len(levels) > 40:  # pragma: no cover
            raise RuntimeError("Landen ascent did not converge")
    return tuple(levels)


def _dn_lower_half(u, levels):
    """dn(u, k_0) for 0 <= u <= K/2 by ascending Landen recursion."""
    z = np.asarray(u, dtype=float)
    for _, kp in levels[1:]:
        z = z / (1.0 + kp)
    _, kp = levels[-1]
    # near-unit modulus: dn = sech z [1 + kp^2/4 (sinh z cosh z + z) tanh z] + O(kp^4 e^{4z})
    sech = 1.0 / np.cosh(z)
    t = np.tanh(z)
    corr = 0.25 * ((kp * np.sinh(z)) * (kp * np.cosh(z)) + kp * kp * z) * t
    d = sech * (1.0 + corr)
    for (k, _), (_, kp_next) in zip(levels[-2::-1], levels[:0:-1]):
        d = 0.5 * (1.0 + k) * (d + kp_next / d)
    # dn(0) = 1 exactly; the reconstruction above rounds it to 1 - eps
    return np.where(np.asarray(u) == 0, 1.0, d)


def _one_minus_dn_lower_half(u, lam):
    """1 - dn(u, k) for 0 <= u <= K/2 from the AGM phase recursion.

    With phi_0 = (phi_1 + psi_1)/2 and psi_1 = arcsin(c_1/a_1 sin phi_1),
    1 - dn = 2 sin(phi_1/2) sin(psi_1/2) / cos(phi_1 - phi_0): a product of
    small quantities, so no cancellation as dn -> 1.
    """
    u = np.asarray(u, dtype=float)
    a, b = 1.0, lam
    ratios = []
    while True:
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        ratios.append(c / a)
        if c <= EPS * a or len(ratios) > 60:
            break
    phi = (2.0 ** len(ratios)) * a * u
    psi = phi
    for r in reversed(ratios):
        psi = np.arcsin(r * np.sin(phi))
        phi_prev, phi = phi, 0.5 * (phi + psi)
    # after the loop: phi = phi_0, phi_prev = phi_1, psi = psi_1
    return 2.0 * np.sin(0.5 * phi_prev) * np.sin(0.5 * psi) / np.cos(phi_prev - phi)


def jacobi_dn(u, lam: float, extra_ascents: int = 0):
    """dn(u, k) with k = sqrt(1 - lam**2), for u in [0, K(k)]."""
    return EllipticModulus(lam, extra_ascents).dn(u)


def xi(v, lam: float):
    """Node map xi(v) = dn((1 - v) K(k), k), increasing from lam to 1."""
    return EllipticModulus(lam).xi(v)


def log_xi(v, lam: float):
    """log xi(v), exact even when xi itself would underflow."""
    return EllipticModulus(lam).log_xi(v)


def xi_inverse(z, lam: float):
    return EllipticModulus(lam).xi_inverse(z)


def moduli_rho(lam: float) -> tuple[float, float, float]:
    """Return ``(rho, rho_tilde, log_rho)`` for the Zolotarev bounds.

    ``rho = exp(pi K(lam) / K'(lam))`` and
    ``rho_tilde = exp((pi^2 / 2) / log(4 / lam))``.
    """
    K, Kp = complete_K(lam)
    log_rho = math.pi * K / Kp
    rho = math.exp(log_rho) if log_rho < 709 else math.inf
    rho_tilde = math.exp(0.5 * math.pi**2 / (math.log(4.0) - math.log(lam)))
    return rho, rho_tilde, log_rho


def log_rho_tilde(lam: float) -> float:
    return 0.5 * math.pi**2 / (math.log(4.0) - math.log(_check_lambda(lam)))
