"""Cumulant generating functions of the variance and of the log-price.

Closed forms exist for p = 0 (either boundary) and p = 1/2.  For p = 0 the
variance is an (absorbed or reflected) Brownian motion, so its CGF is a
pair of Gaussian partial integrals:

    E[e^{uY}; Y > 0] = e^{u y0 + u^2 s^2/2} N(y0/s + u s)  -/+  e^{-u y0 + u^2 s^2/2} N(-y0/s + u s)

with s = xi sqrt(t), minus for the absorbed path (method of images) and plus
for the reflected one.  When u is very negative both terms share the factor
phi(y0/s) and their difference is a difference of Mills ratios, which is
how it is evaluated there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .cev_dist import BoundaryBehaviour, CevModel, expectation, mass_at_zero
from .errors import DomainError, RegimeNotSupported
from .quadrature import QuadratureConfig
from .specfun import mills_ratio_diff

__all__ = [
    "MgfDomain",
    "LeeWings",
    "mgf_domain",
    "lambda_v",
    "lambda_v_numeric",
    "lambda_z",
    "psi",
    "lee_wings",
]

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class MgfDomain:
    """Endpoints of the effective domain of the variance CGF (open at a pole)."""

    lower: float
    upper: float

    def __contains__(self, u: float) -> bool:
        return self.lower < u < self.upper


@dataclass(frozen=True)
class LeeWings:
    u_plus: float
    u_minus: float
    beta_plus: float
    beta_minus: float


def _kind(model: CevModel) -> str:
    if abs(model.p) < 1e-12:
        return "0r" if model.boundary is BoundaryBehaviour.REFLECTING else "0a"
    if abs(model.p - 0.5) < 1e-12:
        return "half"
    raise RegimeNotSupported("closed-form CGF only for p = 0 and p = 1/2")


def mgf_domain(model: CevModel) -> MgfDomain:
    if _kind(model) == "half":
        return MgfDomain(-math.inf, 2.0 / model.s2)
    return MgfDomain(-math.inf, math.inf)


def _log_p0(model: CevModel, u: float, reflecting: bool) -> float:
    s = math.sqrt(model.s2)
    y0 = model.y0
    z = y0 / s
    a = u * y0 + 0.5 * u * u * s * s + float(log_ndtr(z + u * s))
    b = -u * y0 + 0.5 * u * u * s * s + float(log_ndtr(-z + u * s))
    if reflecting:
        return float(np.logaddexp(a, b))
    x = -(z + u * s)
    if x >= 8.0:
        # both terms equal phi(z) R(.) with arguments x and x + 2z
        return -0.5 * z * z - _LOG_SQRT_2PI + math.log(float(mills_ratio_diff(x, 2 * z)))
    return a + math.log(-math.expm1(b - a))


def lambda_v(model: CevModel, u: float) -> float:
    """log E[e^{uV}] in closed form (p = 0 absorbing/reflecting, p = 1/2)."""
    kind = _kind(model)
    u = float(u)
    if u == 0:
        return 0.0
    if kind == "half":
        if not u < 2.0 / model.s2:
            raise DomainError(f"u = {u} is at or beyond the pole 2/(xi^2 t) = {2.0 / model.s2}")
        return 2 * model.y0 * u / (2 - u * model.s2)
    if kind == "0r":
        return _log_p0(model, u, reflecting=True)
    cont = _log_p0(model, u, reflecting=False)
    m = mass_at_zero(model)
    return float(np.logaddexp(math.log(m), cont)) if m > 0 else cont


def lambda_v_numeric(model: CevModel, u: float, cfg: QuadratureConfig | None = None) -> float:
    """log E[e^{uV}] by quadrature against the law, atom included.

    Works for any p; the caller is responsible for u lying inside the domain.
    """
    res = expectation(model, lambda y: u * y, cfg)
    m = mass_at_zero(model)
    if m > 0:
        return float(np.logaddexp(math.log(m), res.log_abs))
    return res.log_abs


def lambda_z(model: CevModel, u: float, tau: float) -> float:
    """log E[e^{uZ}] where Z is the log-price at tau: Lambda_V(u(u-1)tau/2)."""
    if not tau > 0:
        raise DomainError("maturity must be positive")
    return lambda_v(model, u * (u - 1) * tau / 2)


def psi(u):
    """psi(u) = 2 - 4(sqrt(u(u+1)) - u), written without cancellation."""
    u = np.asarray(u, dtype=float)
    # sqrt(u(u+1)) - u = u / (sqrt(u(u+1)) + u)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(np.isinf(u), 0.0, 2 - 4 * u / (np.sqrt(u * (u + 1)) + u))
        out = np.where(u == 0, 2.0, out)
    return out if out.ndim else float(out)


def lee_wings(model: CevModel, tau: float) -> LeeWings:
    """Critical moments u+- and wing slopes beta+- of total implied variance.

    u_minus is reported as a positive number (the moment -u_minus is critical).
    """
    if not tau > 0:
        raise DomainError("maturity must be positive")
    if _kind(model) != "half":
        return LeeWings(math.inf, math.inf, 0.0, 0.0)
    x = model.s2 * tau
    r = 0.5 * math.sqrt(1 + 16 / x)
    beta = 2 * math.sqrt(x) / (math.sqrt(x + 16) + 4)  # = (2/sqrt(x))(sqrt(x+16) - 4)
    return LeeWings(u_plus=0.5 + r, u_minus=r - 0.5, beta_plus=beta, beta_minus=beta)
