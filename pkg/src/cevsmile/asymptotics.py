"""Closed-form small- and large-maturity expansions.

Small maturity, k != 0 (three regimes in p):

    C(k, tau) - (1 - e^k)^+  ~  exp(-c1 h1(tau) + c2 h2(tau)) tau^c3 |log tau|^c4 c5

Large maturity (absorbing p < 3/4, reflecting p < 1/4): algebraic decay of
the price towards its limit, with a constant built from the small-y law of
the CEV density.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .bsm import _log_otm_total
from .cev_dist import BoundaryBehaviour, CevModel, mass_at_zero, moment
from .errors import DomainError, RegimeNotSupported
from .quadrature import QuadratureConfig, integrate_log_axis

__all__ = [
    "SmallTimeConstants",
    "RegimeFunctions",
    "AtmSkewConvexity",
    "LdpSpeedRate",
    "regime_functions",
    "small_time_constants",
    "jp_integral",
    "log_time_value_small_tau",
    "call_small_tau",
    "implied_vol_small_tau",
    "atm_level",
    "atm_skew_convexity_small_tau",
    "frak_m",
    "call_large_tau",
    "implied_vol_large_tau",
    "ldp_speed_rate",
]


def _regime(model: CevModel) -> str:
    if model.is_lognormal:
        return "p=1"
    return "p<1" if model.p < 1 else "p>1"


def _check_k(k: float) -> None:
    if k == 0 or not math.isfinite(k):
        raise DomainError("small-maturity expansions require k != 0; use atm_level at k = 0")


@dataclass(frozen=True)
class RegimeFunctions:
    """Laplace exponents: f0, f1 for p < 1 and g0, g1 for p = 1 (others None)."""

    f0: Callable[[float], float] | None = None
    f1: Callable[[float], float] | None = None
    g0: Callable[[float], float] | None = None
    g1: Callable[[float], float] | None = None
    # derivatives used by the Laplace step
    f0_dd: Callable[[float], float] | None = None
    f1_d: Callable[[float], float] | None = None
    g0_dd: Callable[[float], float] | None = None
    g1_d: Callable[[float], float] | None = None


def regime_functions(model: CevModel, k: float) -> RegimeFunctions:
    s2 = model.s2
    if model.is_lognormal:
        return RegimeFunctions(
            g0=lambda y: k * k / (2 * y) + math.log(y) / s2,
            g1=lambda y: math.log(y) / s2,
            g0_dd=lambda y: k * k / y ** 3 - 1 / (s2 * y * y),
            g1_d=lambda y: 1 / (s2 * y),
        )
    if model.p < 1:
        q = 1 - model.p
        c = s2 * q * q
        y0q = model.y0 ** q
        return RegimeFunctions(
            f0=lambda y: k * k / (2 * y) + y ** (2 * q) / (2 * c),
            f1=lambda y: (y * model.y0) ** q / c,
            f0_dd=lambda y: k * k / y ** 3 + q * (2 * q - 1) * y ** (2 * q - 2) / c,
            f1_d=lambda y: q * y0q * y ** (q - 1) / c,
        )
    return RegimeFunctions()


@dataclass(frozen=True)
class SmallTimeConstants:
    """One row of the small-maturity table for a given model and k."""

    regime: str
    k: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    beta_p: float | None = None
    ybar_p: float | None = None
    y_star: float | None = None
    jp: float | None = None
    remainder_order: str = ""

    def h1(self, tau: float) -> float:
        if self.regime == "p<1":
            return tau ** (self.beta_p - 1)
        if self.regime == "p=1":
            lt = math.log(tau)
            return (lt + math.log(-lt)) ** 2
        return 0.0

    def h2(self, tau: float) -> float:
        if self.regime == "p<1":
            return tau ** ((self.beta_p - 1) / 2)
        if self.regime == "p=1":
            ll = abs(math.log(tau))
            return math.log(ll) ** 2 / ll
        return 0.0


def _c5_lognormal_forms(model: CevModel, k: float) -> tuple[float, float]:
    """The two closed forms of the p = 1 prefactor (without the log^2 term)."""
    s2 = model.s2
    mu = model.constants.mu
    ys = k * k * s2 / 2
    g0dd = 4 / (s2 ** 3 * k ** 4)
    expo = k / 2 - mu * mu / (2 * s2) + mu * math.log(ys) / s2
    long_form = math.sqrt(ys) * math.exp(expo) / (k * k * math.sqrt(model.xi ** 2 * 2 * math.pi * model.t) * math.sqrt(g0dd))
    short_form = abs(k) * model.xi ** 3 * model.t ** 1.5 * math.exp(expo) / (4 * math.sqrt(math.pi))
    return long_form, short_form


def small_time_constants(model: CevModel, k: float, cfg: QuadratureConfig | None = None) -> SmallTimeConstants:
    """Constants c1..c5 of the small-maturity expansion at log-moneyness k.

    Two departures from the tabulated formulas, both checked against the
    quadrature pricer:

    * p = 1: the lognormal exponent -(log y - log ttau - mu)^2/(2 xi^2 t)
      contains -(log y)^2/(2 xi^2 t), which is O(1) in tau and so belongs in
      c5.  The factor exp(-(log y*)^2/(2 xi^2 t)) is included.
    * p > 1: the exponent inside c5 is -y0^(2(1-p))/(2 xi^2 t (1-p)^2),
      matching the density and chi(tau, p).
    """
    _check_k(k)
    reg = _regime(model)
    s2 = model.s2
    if reg == "p<1":
        p = model.p
        q = 1 - p
        c = s2 * q * q
        beta = 1 / (3 - 2 * p)
        ybar = (k * k * s2 * q / 2) ** beta
        fn = regime_functions(model, k)
        f0dd = fn.f0_dd(ybar)
        f1d = fn.f1_d(ybar)
        log_c5 = (0.5 * p * math.log(model.y0) + 1.5 * q * math.log(ybar) + k / 2
                  - model.y0 ** (2 * q) / (2 * c) + f1d * f1d / (2 * f0dd)
                  - math.log(k * k * model.xi * math.sqrt(2 * math.pi * f0dd * model.t)))
        return SmallTimeConstants(
            regime=reg, k=k, c1=fn.f0(ybar), c2=fn.f1(ybar), c3=(6 - 5 * p) / (6 - 4 * p), c4=0.0,
            c5=math.exp(log_c5), beta_p=beta, ybar_p=ybar,
            remainder_order=f"O(tau^{(1 - beta) / 2:.6g})",
        )
    if reg == "p=1":
        mu = model.constants.mu
        ys = k * k * s2 / 2
        fn = regime_functions(model, k)
        _, short = _c5_lognormal_forms(model, k)
        c5 = short * math.exp(-math.log(ys) ** 2 / (2 * s2))
        return SmallTimeConstants(
            regime=reg, k=k, c1=1 / (2 * s2), c2=1 / (2 * s2),
            c3=fn.g0(ys) - mu / s2, c4=fn.g1(ys) - mu / s2 - 2, c5=c5, y_star=ys,
            remainder_order="O(1/|log tau|)",
        )
    p = model.p
    eta = model.constants.eta
    c2x = 2 * s2 * (1 - p) ** 2
    jp = jp_integral(2 * p, k, cfg=cfg)
    log_c5 = (math.log(2 * (p - 1)) - model.y0 ** (2 * (1 - p)) / c2x + math.log(jp)
              - (eta + 1) * math.log(c2x) - gammaln(eta + 1))
    return SmallTimeConstants(
        regime=reg, k=k, c1=0.0, c2=0.0, c3=2 * p - 1, c4=0.0, c5=math.exp(log_c5), jp=jp,
        remainder_order=f"O(tau^{p - 1:.6g})",
    )


@functools.lru_cache(maxsize=256)
def _jp_cached(q: float, k: float, T: float, cfg: QuadratureConfig) -> float:
    def logf(u):
        y = np.exp(u)
        kk = np.full_like(y, k)
        # OTM value of BS(k, y/T, T): call for k > 0, put for k < 0
        return _log_otm_total(kk, np.sqrt(y / T * T)) + (1 - q) * u

    lo = math.log(k * k) - 3.0
    res = integrate_log_axis(logf, lo, lo + 10.0, cfg)
    return res.value


def jp_integral(q: float, k: float, T: float = 1.0, cfg: QuadratureConfig | None = None) -> float:
    """J^q(k) = int_0^inf OTM(k, y/T, T) y^{-q} dy for q > 1 and k != 0.

    The OTM value is the call for k > 0 and the put e^k - 1 + BS for k < 0.
    The integrand depends on y and T only through y/T * T, so the value does
    not depend on T.  Results are cached per (q, k, T, cfg).
    """
    if not q > 1:
        raise DomainError("J^q needs q > 1")
    _check_k(k)
    if not T > 0:
        raise DomainError("T must be positive")
    return _jp_cached(float(q), float(k), float(T), cfg or QuadratureConfig())


def log_time_value_small_tau(model: CevModel, k: float, tau: float, cfg: QuadratureConfig | None = None) -> float:
    """Log of the small-maturity expansion of C - (1 - e^k)^+."""
    if not 0 < tau < 1:
        raise DomainError("small-maturity expansion needs 0 < tau < 1")
    c = small_time_constants(model, k, cfg)
    return (-c.c1 * c.h1(tau) + c.c2 * c.h2(tau) + c.c3 * math.log(tau)
            + c.c4 * math.log(abs(math.log(tau))) + math.log(c.c5))


def call_small_tau(model: CevModel, k: float, tau: float, cfg: QuadratureConfig | None = None) -> float:
    lt = log_time_value_small_tau(model, k, tau, cfg)
    intr = -math.expm1(k) if k < 0 else 0.0
    return intr + math.exp(lt)


def implied_vol_small_tau(model: CevModel, k: float, tau: float) -> float:
    """Leading-order implied variance sigma^2 as tau -> 0."""
    _check_k(k)
    if not 0 < tau < 1:
        raise DomainError("small-maturity expansion needs 0 < tau < 1")
    if model.is_lognormal:
        return k * k * model.s2 / (tau * math.log(tau) ** 2)
    if model.p < 1:
        beta = 1 / (3 - 2 * model.p)
        return (1 - beta) * (k * k * model.s2 * (1 - model.p) / (2 * tau)) ** beta
    return k * k / (2 * (2 * model.p - 1) * tau * abs(math.log(tau)))


def atm_level(model: CevModel, cfg: QuadratureConfig | None = None) -> float:
    """E(sqrt V), the limit of the at-the-money implied volatility."""
    return moment(model, 0.5, cfg)


@dataclass(frozen=True)
class AtmSkewConvexity:
    skew_left: float
    skew_right: float
    convexity: float


def atm_skew_convexity_small_tau(model: CevModel, tau: float, cfg: QuadratureConfig | None = None) -> AtmSkewConvexity:
    """Moment-based small-maturity skew and convexity of sigma^2 at k = 0.

    Implements the moment formulas as stated; the convexity is +inf when
    E(V^-1/2) is infinite.  Note that the mixture smile is even in k (put-call
    symmetry holds conditionally on V), so the numerically computed two-sided
    skew vanishes when m_t = 0; the tau-linear term below is not observed in
    the priced smile.
    """
    if not tau > 0:
        raise DomainError("maturity must be positive")
    m = mass_at_zero(model)
    if not m < 1:
        raise DomainError("the law must not be concentrated at zero")
    e_half = moment(model, 0.5, cfg)
    e_3half = moment(model, 1.5, cfg)
    e_mhalf = moment(model, -0.5, cfg)
    if math.isinf(e_3half):
        smooth = -math.inf
    else:
        smooth = -e_half * (e_3half - e_half ** 3) * tau / 48
    atom = m * e_half * math.sqrt(math.pi) / math.sqrt(2 * tau)
    conv = math.inf if math.isinf(e_mhalf) else e_half / tau * (e_mhalf - (1 - m * m * math.sqrt(math.pi) / 8) / e_half)
    return AtmSkewConvexity(skew_left=smooth - atom, skew_right=smooth + atom, convexity=conv)


def frak_m(model: CevModel, eta: float) -> float:
    """The large-maturity constant, evaluated at order ``eta`` (eta or -eta)."""
    p = model.p
    if model.is_lognormal or p >= 1:
        raise RegimeNotSupported("large-maturity constant defined for p < 1")
    s2 = model.s2
    g = math.gamma(0.5 - 2 * p)
    return (2 ** (3 - 6 * p - eta) * g / (math.sqrt(math.pi) * math.gamma(1 + eta) * abs(1 - p) ** (2 * eta + 1)
                                         * s2 ** (eta + 1))
            * math.exp(-model.y0 ** (2 * (1 - p)) / (2 * s2 * (1 - p) ** 2)))


def _large_tau_regime(model: CevModel) -> str:
    if model.is_lognormal or model.p >= 1:
        raise RegimeNotSupported("large-maturity expansion needs p < 3/4 (absorbing) or p < 1/4 (reflecting)")
    if model.has_atom and model.p < 0.75:
        return "absorbing"
    if model.boundary is BoundaryBehaviour.REFLECTING and model.p < 0.25:
        return "reflecting"
    raise RegimeNotSupported("large-maturity expansion needs p < 3/4 (absorbing) or p < 1/4 (reflecting)")


def call_large_tau(model: CevModel, k: float, tau: float) -> float:
    """Large-maturity expansion of the call price (leading correction)."""
    if not tau > 0:
        raise DomainError("maturity must be positive")
    reg = _large_tau_regime(model)
    eta = model.constants.eta
    p = model.p
    if reg == "absorbing":
        m = mass_at_zero(model)
        intr = -math.expm1(k) if k < 0 else 0.0
        return (1 - m + m * intr
                - 8 * math.exp(k / 2) * model.y0 * (0.5 - 2 * p) * frak_m(model, -eta) * tau ** (-(2 - 2 * p)))
    return 1 - math.exp(k / 2) * frak_m(model, eta) * tau ** (-(1 - 2 * p))


def implied_vol_large_tau(model: CevModel, k: float, tau: float) -> float:
    """Leading-order implied variance as tau -> infinity (reflecting, p < 1/4)."""
    if _large_tau_regime(model) != "reflecting":
        raise RegimeNotSupported("large-maturity implied volatility needs a reflecting origin and p < 1/4")
    if not tau > 1:
        raise DomainError("large-maturity expansion needs tau > 1")
    return 8 * (1 - 2 * model.p) * math.log(tau) / tau


@dataclass(frozen=True)
class LdpSpeedRate:
    speed: float
    rate: float


def ldp_speed_rate(model: CevModel, k: float, tau: float) -> LdpSpeedRate:
    """Speed h*(tau) and rate Lambda*(k) of the small-maturity tail decay."""
    if not 0 < tau < 1:
        raise DomainError("speed is defined for 0 < tau < 1")
    if model.is_lognormal:
        return LdpSpeedRate(speed=1 / math.log(tau) ** 2, rate=1 / (2 * model.s2))
    if model.p > 1:
        return LdpSpeedRate(speed=abs(1 / math.log(tau)), rate=2 * model.p - 1)
    _check_k(k)
    beta = 1 / (3 - 2 * model.p)
    return LdpSpeedRate(speed=tau ** (1 - beta), rate=small_time_constants(model, k).c1)
