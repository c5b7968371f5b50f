"""Special functions used by the CEV law, its atom and the closed-form MGFs.

The heavy lifting is delegated to :mod:`scipy.special` (AMOS / Cephes), which
is accurate to a few ulps on the ranges used here.  What this module adds is
a log-domain Bessel evaluation that stays finite where the exponentially
scaled ``ive`` underflows (tiny arguments with positive order) and a pair of
Mills-ratio helpers for deep Gaussian tails.
"""
from __future__ import annotations

import enum
import math

import numpy as np
from scipy import special as sc

from .errors import DomainError

__all__ = [
    "BesselScaling",
    "bessel_i",
    "log_bessel_i",
    "lower_gamma_reg",
    "upper_gamma_reg",
    "erf",
    "norm_cdf",
    "norm_pdf",
    "log_norm_cdf",
    "mills_ratio",
    "mills_ratio_diff",
]

_LOG_TINY = -700.0
_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class BesselScaling(enum.Enum):
    UNSCALED = "unscaled"
    EXP_SCALED = "exp_scaled"


def _check_order(nu: float) -> None:
    if not nu > -1.0:
        raise DomainError(f"Bessel order must exceed -1, got {nu}")


def _log_series(nu: float, x: np.ndarray) -> np.ndarray:
    """log I_nu(x) from the ascending series; meant for x below ~1."""
    half = 0.5 * x
    q = half * half
    term = np.ones_like(x)
    total = np.ones_like(x)
    for m in range(1, 40):
        term = term * q / (m * (m + nu))
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    with np.errstate(divide="ignore"):
        return nu * np.log(half) - sc.gammaln(nu + 1.0) + np.log(total)


_LARGE_X = 1e8  # scipy's ive returns nan beyond roughly 1e9


def _log_scaled_asymptotic(nu: float, x: np.ndarray) -> np.ndarray:
    """log(e^-x I_nu(x)) from the large-argument expansion, x >= 1e8."""
    mu = 4.0 * nu * nu
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 30):
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if np.all(np.abs(nxt) >= np.abs(term)):
            break
        term = nxt
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return -0.5 * np.log(2 * np.pi * x) + np.log(total)


def log_bessel_i(nu: float, x, scaled: bool = False):
    """Natural log of I_nu(x) (or of e^{-x} I_nu(x) when ``scaled``).

    Works for x spanning the whole double range.  For positive order and
    tiny x the scaled value underflows, so the ascending series is used in
    log form instead.
    """
    _check_order(nu)
    x_in = np.asarray(x, dtype=float)
    xa = np.atleast_1d(x_in)
    if np.any(xa < 0):
        raise DomainError("Bessel argument must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v = sc.ive(nu, xa)
        out = np.log(v)
        large = xa >= _LARGE_X
        small = ((v < 1e-280) | ~np.isfinite(out) | (xa < 1e-3)) & (xa < 1.0)
        if np.any(small):
            out[small] = _log_series(nu, xa[small]) - xa[small]
        if np.any(large):
            out[large] = _log_scaled_asymptotic(nu, xa[large])
        zero = xa == 0.0
        if np.any(zero):
            out[zero] = 0.0 if nu == 0 else (-np.inf if nu > 0 else np.inf)
    if not scaled:
        out = out + xa
    return out.reshape(x_in.shape) if x_in.ndim else float(out[0])


def bessel_i(nu: float, x, scaling: BesselScaling = BesselScaling.UNSCALED):
    """Modified Bessel function of the first kind, real order nu > -1."""
    _check_order(nu)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("Bessel argument must be non-negative")
    if scaling is BesselScaling.EXP_SCALED:
        out = sc.ive(nu, xa)
        large = xa >= _LARGE_X
        if np.any(large):
            out = np.where(large, np.exp(_log_scaled_asymptotic(nu, np.where(large, xa, _LARGE_X))), out)
    else:
        out = sc.iv(nu, xa)
        if np.any(np.isinf(out)):
            raise OverflowError("I_nu(x) overflows; use EXP_SCALED")
    return out if np.ndim(out) else float(out)


def lower_gamma_reg(n: float, x):
    """Regularised lower incomplete gamma P(n, x)."""
    if not n > 0:
        raise DomainError(f"gamma parameter must be positive, got {n}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("incomplete gamma argument must be non-negative")
    out = sc.gammainc(n, xa)
    return out if np.ndim(out) else float(out)


def upper_gamma_reg(n: float, x):
    """Regularised upper incomplete gamma Q(n, x) = 1 - P(n, x), computed directly."""
    if not n > 0:
        raise DomainError(f"gamma parameter must be positive, got {n}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("incomplete gamma argument must be non-negative")
    out = sc.gammaincc(n, xa)
    return out if np.ndim(out) else float(out)


def erf(z):
    out = sc.erf(z)
    return out if np.ndim(out) else float(out)


def norm_cdf(z):
    out = sc.ndtr(z)
    return out if np.ndim(out) else float(out)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * z * z - _LOG_SQRT_2PI)
    return out if np.ndim(out) else float(out)


def log_norm_cdf(z):
    out = sc.log_ndtr(z)
    return out if np.ndim(out) else float(out)


def mills_ratio(x):
    """R(x) = N(-x)/phi(x), finite for every real x."""
    x = np.asarray(x, dtype=float)
    # erfcx(t) = exp(t^2) erfc(t), so N(-x)/phi(x) = sqrt(pi/2) erfcx(x/sqrt2)
    out = math.sqrt(math.pi / 2.0) * sc.erfcx(x / _SQRT2)
    return out if np.ndim(out) else float(out)


def _mills_diff_series(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    # R(x) ~ sum_n (-1)^n (2n-1)!! x^{-(2n+1)}.  Each difference
    # a^{-m} - (a+d)^{-m} is formed as -a^{-m} expm1(-m log1p(d/a)).
    r = np.log1p(d / a)
    inv2 = 1.0 / (a * a)
    coef = 1.0 / a  # (2n-1)!! a^{-(2n+1)}
    total = np.zeros_like(a)
    prev = np.full_like(a, np.inf)
    live = np.ones(a.shape, dtype=bool)
    for n in range(60):
        m = 2 * n + 1
        term = coef * -np.expm1(-m * r)
        mag = np.abs(term)
        live &= mag < prev
        total = np.where(live, total + (-1) ** n * term, total)
        prev = np.where(live, mag, prev)
        if not live.any() or np.all(mag <= 1e-17 * np.abs(total)):
            break
        coef = coef * (m * inv2)
    return total


def mills_ratio_diff(x, d):
    """R(x) - R(x + d) for d >= 0, accurate when both terms nearly cancel.

    Uses the asymptotic series term by term for x >= 8 and the direct
    difference otherwise.
    """
    x, d = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(d, dtype=float))
    out = np.empty(x.shape)
    deep = x >= 8.0
    if np.any(~deep):
        xs, ds = x[~deep], d[~deep]
        out[~deep] = mills_ratio(xs) - mills_ratio(xs + ds)
    if np.any(deep):
        out[deep] = _mills_diff_series(x[deep], d[deep])
    return out if out.ndim else float(out)
