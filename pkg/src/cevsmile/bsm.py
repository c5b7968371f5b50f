"""Black-Scholes kernel with zero rates, unit spot and log-moneyness k.

    BS(k, w, tau) = N(d+) - e^k N(d-),   d+- = -k/s +- s/2,   s = sqrt(w tau).

Prices are split into intrinsic value plus out-of-the-money (OTM) time value.
The OTM part is what carries information in the wings, so it is also
available in log form.  With lo = |k|/s - s/2 it equals

    e^{min(k,0)} * [N(-lo) - e^{|k|} N(-lo-s)]  =  e^{min(k,0)} phi(lo) [R(lo) - R(lo+s)]

where R is the Mills ratio.  The second form is used once lo >= 8, where
the first would cancel catastrophically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import log_ndtr, ndtr

from .errors import ArbitrageError, DomainError
from .specfun import mills_ratio_diff

__all__ = [
    "BsPartials",
    "bs_call",
    "bs_put",
    "log_otm_value",
    "intrinsic",
    "bs_partials",
    "bs_small_time",
    "bs_large_time",
    "implied_vol",
    "implied_vol_from_log_otm",
    "d_plus_minus",
]

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
_DEEP = 8.0


def _check_tau(tau):
    if np.any(~(np.asarray(tau) > 0)):
        raise DomainError("maturity must be positive")


def intrinsic(k):
    """Call intrinsic value (1 - e^k)^+."""
    k = np.asarray(k, dtype=float)
    out = np.where(k < 0, -np.expm1(np.minimum(k, 0.0)), 0.0)
    return out if out.ndim else float(out)


def d_plus_minus(k, w, tau):
    s = np.sqrt(np.asarray(w, dtype=float) * tau)
    return -k / s + s / 2, -k / s - s / 2


def _log_otm_total(k: np.ndarray, s: np.ndarray) -> np.ndarray:
    """log OTM value given total standard deviation s (arrays, broadcast)."""
    ak = np.abs(k)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lo = ak / s - s / 2
        out = np.full(np.broadcast(k, s).shape, -np.inf)
        pos = s > 0
        deep = pos & (lo >= _DEEP)
        direct = pos & ~deep
        if np.any(direct):
            lo_d, s_d, ak_d = lo[direct], s[direct], ak[direct]
            # N(-lo) - e^{|k|} N(-lo-s), formed as N(-lo) * (1 - exp(...))
            a = log_ndtr(-lo_d)
            b = ak_d + log_ndtr(-lo_d - s_d)
            out[direct] = a + np.log(-np.expm1(b - a))
        if np.any(deep):
            lo_p, s_p = lo[deep], s[deep]
            out[deep] = -0.5 * lo_p * lo_p - _LOG_SQRT_2PI + np.log(mills_ratio_diff(lo_p, s_p))
        out = out + np.minimum(k, 0.0)
    return out


def log_otm_value(k, w, tau):
    """Log of the OTM option value: the call for k >= 0, the put for k < 0.

    Returns ``-inf`` when w = 0.
    """
    _check_tau(tau)
    k, w = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(w, dtype=float))
    if np.any(w < 0):
        raise DomainError("variance rate must be non-negative")
    out = _log_otm_total(k, np.sqrt(w * tau))
    return out if out.ndim else float(out)


def bs_call(k, w, tau):
    """Undiscounted call on a unit forward with strike e^k."""
    out = intrinsic(k) + np.exp(log_otm_value(k, w, tau))
    return out if np.ndim(out) else float(out)


def bs_put(k, w, tau):
    k = np.asarray(k, dtype=float)
    out = np.where(k > 0, np.expm1(np.maximum(k, 0.0)), 0.0) + np.exp(log_otm_value(k, w, tau))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class BsPartials:
    d_k: float
    d_w: float
    d_kk: float
    d_kw: float
    d_ww: float


def bs_partials(k: float, w: float, tau: float) -> BsPartials:
    """Analytic first and second derivatives in (k, w).

    With s = sqrt(w tau):  d_k = -e^k N(d-),  d_w = phi(d+) tau / (2 s),
    d_kk = e^k [phi(d-)/s - N(d-)],  d_kw = e^k phi(d-) d+ / (2 w),
    d_ww = d_w (d+ d- - 1) / (2 w).
    """
    _check_tau(tau)
    if not w > 0:
        raise DomainError("partials need w > 0")
    s = math.sqrt(w * tau)
    dp, dm = -k / s + s / 2, -k / s - s / 2
    phim = math.exp(-0.5 * dm * dm - _LOG_SQRT_2PI + k)  # e^k phi(d-) = phi(d+)
    d_w = phim * tau / (2 * s)
    return BsPartials(
        d_k=-math.exp(k) * float(ndtr(dm)),
        d_w=d_w,
        d_kk=phim / s - math.exp(k) * float(ndtr(dm)),
        d_kw=phim * dp / (2 * w),
        d_ww=d_w * (dp * dm - 1) / (2 * w),
    )


def bs_small_time(k: float, y: float, ttau: float, tau: float) -> float:
    """Leading term of BS(k, y/ttau, tau) when tau/ttau is small (k > 0)."""
    if not k > 0:
        raise DomainError("small-time kernel expansion needs k > 0")
    r = tau / ttau
    return y ** 1.5 / (k * k * math.sqrt(2 * math.pi)) * r ** 1.5 * math.exp(-k * k / (2 * y * r) + k / 2)


def bs_large_time(k: float, y: float, tau: float) -> float:
    """Leading term of BS(k, y, tau) as tau grows."""
    return 1.0 - 4.0 / math.sqrt(2 * math.pi * tau * y) * math.exp(-y * tau / 8 + k / 2)


def implied_vol_from_log_otm(log_otm: float, k: float, tau: float) -> float:
    """Implied volatility matching a given log OTM value.

    Works entirely with log prices, so values far below the double range of
    the price itself (deep wings, tiny maturities) invert correctly.
    """
    _check_tau(tau)
    if log_otm == -math.inf:
        return 0.0
    cap = min(k, 0.0)  # OTM value tends to e^{min(k,0)} as vol -> infinity
    if not log_otm < cap:
        raise ArbitrageError("price at or above the upper no-arbitrage bound")

    def f(s):
        return float(_log_otm_total(np.array([k]), np.array([s]))[0]) - log_otm

    hi = 1.0 if k == 0 else max(1.0, math.sqrt(2 * abs(k)))
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e4:
            raise ArbitrageError("price too close to the upper bound to invert")
    lo = hi / 2
    while f(lo) > 0:
        lo /= 2
        if lo < 1e-300:
            return 0.0
    s = brentq(f, lo, hi, xtol=1e-13 * math.sqrt(tau) * min(1.0, lo), rtol=4 * np.finfo(float).eps, maxiter=500)
    return s / math.sqrt(tau)


def implied_vol(price: float, k: float, tau: float) -> float:
    """Black-Scholes implied volatility of a call price."""
    _check_tau(tau)
    lower = float(intrinsic(k))
    if not math.isfinite(price) or price < lower or price >= 1.0:
        raise ArbitrageError(f"call price {price} outside [{lower}, 1)")
    if k < 0:
        otm = price - lower
    else:
        otm = price
    if otm <= 0:
        return 0.0
    return implied_vol_from_log_otm(math.log(otm), k, tau)
