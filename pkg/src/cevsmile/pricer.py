"""Mixture pricer: C(k, tau) = int BS(k, y, tau) zeta(y) dy + m_t (1 - e^k)^+.

Conditionally on the variance draw the option is priced by Black-Scholes, so
every quantity here is a one-dimensional integral against the CEV law.  The
OTM time value is integrated in log space, which keeps relative accuracy
for prices far below the smallest double.  Because the integral runs in
log y with the peak located numerically, the small-maturity concentration
of the integrand is handled without a maturity-dependent change of
variable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import log_ndtr

from .bsm import _log_otm_total, implied_vol_from_log_otm, intrinsic
from .cev_dist import CevModel, expectation, mass_at_zero
from .errors import CevError, DegenerateDenominator, DomainError
from .quadrature import QuadratureConfig

__all__ = [
    "QuadratureConfig",
    "SmilePoint",
    "SkewConvexity",
    "PointError",
    "log_time_value",
    "call_price",
    "put_price",
    "digital_price",
    "implied_vol_at",
    "smile",
    "skew_convexity_integrals",
    "hedge_ratio",
]

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def _check_tau(tau):
    if not tau > 0:
        raise DomainError("maturity must be positive")


def log_time_value(model: CevModel, k: float, tau: float, cfg: QuadratureConfig | None = None) -> float:
    """Log of the OTM value: call for k >= 0, put for k < 0.

    The atom never contributes: BS at zero variance is pure intrinsic.
    """
    _check_tau(tau)
    if not math.isfinite(k):
        raise DomainError("log-strike must be finite")
    kk = np.array([float(k)])

    def log_g(y):
        return _log_otm_total(np.broadcast_to(kk, y.shape), np.sqrt(y * tau))

    res = expectation(model, log_g, cfg)
    return res.log_abs


def call_price(model: CevModel, k: float, tau: float, cfg: QuadratureConfig | None = None) -> float:
    """Call on a unit forward with strike e^k."""
    lt = log_time_value(model, k, tau, cfg)
    tv = math.exp(lt) if lt > -745 else 0.0
    if k >= 0:
        return tv
    return float(intrinsic(k)) + tv


def put_price(model: CevModel, k: float, tau: float, cfg: QuadratureConfig | None = None) -> float:
    lt = log_time_value(model, k, tau, cfg)
    tv = math.exp(lt) if lt > -745 else 0.0
    if k <= 0:
        return tv
    return math.expm1(k) + tv


def digital_price(model: CevModel, k: float, tau: float, cfg: QuadratureConfig | None = None) -> float:
    """P(Z_tau <= k), Z the log of the unit-forward asset at tau."""
    _check_tau(tau)
    # integrate whichever of P(Z <= k | y), P(Z > k | y) is the small one
    if k >= 0:
        res = expectation(model, lambda y: log_ndtr(-(k + y * tau / 2) / np.sqrt(y * tau)), cfg)
        return float(min(1.0, max(0.0, 1.0 - res.value)))
    res = expectation(model, lambda y: log_ndtr((k + y * tau / 2) / np.sqrt(y * tau)), cfg)
    return float(min(1.0, max(0.0, res.value)))


def implied_vol_at(model: CevModel, k: float, tau: float, cfg: QuadratureConfig | None = None) -> float:
    """Implied volatility of the mixture price at (k, tau)."""
    return implied_vol_from_log_otm(log_time_value(model, k, tau, cfg), k, tau)


@dataclass(frozen=True)
class SmilePoint:
    k: float
    tau: float
    price: float
    implied_vol: float
    log_time_value: float = math.nan


class PointError(CevError):
    """Failure at one grid point; carries the index into the input list."""

    def __init__(self, index: int, k: float, cause: Exception):
        super().__init__(f"point {index} (k={k}): {cause}")
        self.index = index
        self.k = k
        self.cause = cause


def smile(model: CevModel, ks: Sequence[float], tau: float, cfg: QuadratureConfig | None = None) -> list[SmilePoint]:
    """Prices and implied vols at each k, in input order."""
    out = []
    for i, k in enumerate(ks):
        try:
            lt = log_time_value(model, k, tau, cfg)
            vol = implied_vol_from_log_otm(lt, k, tau)
        except CevError as exc:
            raise PointError(i, k, exc) from exc
        tv = math.exp(lt) if lt > -745 else 0.0
        price = tv + (float(intrinsic(k)) if k < 0 else 0.0)
        out.append(SmilePoint(k=float(k), tau=float(tau), price=price, implied_vol=vol, log_time_value=lt))
    return out


@dataclass(frozen=True)
class SkewConvexity:
    """dC/dk and d2C/dk2, left and right limits (equal unless an atom sits at k=0)."""

    d1_left: float
    d1_right: float
    d2_left: float
    d2_right: float


def skew_convexity_integrals(model: CevModel, k: float, tau: float,
                             cfg: QuadratureConfig | None = None) -> SkewConvexity:
    _check_tau(tau)
    ek = math.exp(k)

    def log_dk(y):  # log of e^k N(d-), with d- = -k/s - s/2
        s = np.sqrt(y * tau)
        return k + log_ndtr(-k / s - s / 2)

    def log_dkk(y):  # e^k [phi(d-)/s - N(d-)], sign can change
        s = np.sqrt(y * tau)
        dm = -k / s - s / 2
        a = -0.5 * dm * dm - _LOG_SQRT_2PI - np.log(s)
        b = log_ndtr(dm)
        big = np.maximum(a, b)
        with np.errstate(divide="ignore"):
            mag = big + np.log(np.abs(-np.expm1(np.minimum(a, b) - big)))
        return k + mag, np.where(a >= b, 1.0, -1.0)

    d1 = -expectation(model, log_dk, cfg).value
    d2 = expectation(model, log_dkk, cfg, signed=True).value
    m = mass_at_zero(model)
    # atom term m (1 - e^k)^+ : derivative -m e^k on k < 0, zero on k > 0
    left = -m * ek if k <= 0 else 0.0
    right = -m * ek if k < 0 else 0.0
    return SkewConvexity(d1_left=d1 + left, d1_right=d1 + right, d2_left=d2 + left, d2_right=d2 + right)


def hedge_ratio(model: CevModel, S: float, k: float, tau: float, T: float,
                cfg: QuadratureConfig | None = None) -> float:
    """Units of the T-maturity option that offset the tau-maturity one.

    The spot-delta of S * BS(k - log S, y, tau) is N(d+(k - log S, y, tau)),
    so theta is a ratio of sqrt(y)-weighted delta integrals.  The atom does
    not enter (its weight sqrt(0) vanishes); models with m_t > 0 are
    evaluated as they are.
    """
    if not (S > 0 and tau > 0 and T >= tau):
        raise DomainError("hedge ratio needs S > 0 and T >= tau > 0")
    kk = k - math.log(S)

    def weighted_delta(mat):
        def lg(y):
            s = np.sqrt(y * mat)
            return 0.5 * np.log(y) + log_ndtr(-kk / s + s / 2)
        return expectation(model, lg, cfg)

    num = weighted_delta(tau)
    if T == tau:
        return 1.0
    den = weighted_delta(T)
    if den.mantissa == 0 or not math.isfinite(den.log_abs) or den.log_abs < -700:
        raise DegenerateDenominator("hedge instrument carries no delta exposure")
    return math.exp(num.log_abs - den.log_abs)
