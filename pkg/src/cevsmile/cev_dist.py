"""Terminal law of the CEV variance driver dY = xi * Y^p dB at time t.

For p != 1 the continuous part of the law has the Bessel-kernel density

    phi_nu(y) = sqrt(y0) y^(1/2-2p) / (|1-p| xi^2 t)
                * exp(-(y^(2(1-p)) + y0^(2(1-p))) / (2 xi^2 t (1-p)^2))
                * I_nu((y0 y)^(1-p) / ((1-p)^2 xi^2 t))

with nu = -eta when the origin absorbs (p < 1) and nu = eta otherwise,
eta = 1/(2(p-1)).  For p = 1 the law is lognormal.  When the origin is
absorbing and attainable an atom of mass m_t sits at zero.

Everything is evaluated in log space.  The two exponentials combine into
``-(a-b)^2/(2c)`` with a = y^(1-p), b = y0^(1-p), c = xi^2 t (1-p)^2, and the
Bessel factor uses the exponentially scaled function, so no intermediate
quantity overflows for any representable y.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .quadrature import QuadratureConfig, ScaledIntegral, integrate_log_axis
from .specfun import log_bessel_i, upper_gamma_reg

__all__ = [
    "BoundaryBehaviour",
    "CevModel",
    "CevConstants",
    "mass_at_zero",
    "density",
    "log_density",
    "moment",
    "moment_is_finite",
    "expectation",
    "small_y_law",
    "chi",
    "density_bounds_p_gt_1",
]

P_ONE_TOL = 1e-10


class BoundaryBehaviour(enum.Enum):
    ABSORBING = "absorbing"
    REFLECTING = "reflecting"

    @classmethod
    def parse(cls, s: "str | BoundaryBehaviour") -> "BoundaryBehaviour":
        if isinstance(s, cls):
            return s
        try:
            return cls(str(s).strip().lower())
        except ValueError:
            raise DomainError(f"unknown boundary behaviour {s!r}") from None


@dataclass(frozen=True)
class CevConstants:
    eta: float  # nan at p = 1
    mu: float


@dataclass(frozen=True)
class CevModel:
    """Parameters of the randomised-variance model.

    ``boundary`` only matters when the origin is attainable (p < 1).  For
    p in [1/2, 1) the origin is absorbing and a reflecting request is
    rejected.
    """

    y0: float
    xi: float
    t: float
    p: float
    boundary: BoundaryBehaviour = BoundaryBehaviour.ABSORBING

    def __post_init__(self):
        for name in ("y0", "xi", "t"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a positive finite number, got {v!r}")
        if not math.isfinite(self.p):
            raise DomainError("p must be finite")
        object.__setattr__(self, "boundary", BoundaryBehaviour.parse(self.boundary))
        if self.boundary is BoundaryBehaviour.REFLECTING and 0.5 <= self.p < 1 and not self.is_lognormal:
            raise DomainError("a reflecting origin requires p < 1/2")

    @classmethod
    def with_auto_xi(cls, c: float, y0: float, t: float, p: float,
                     boundary: "BoundaryBehaviour | str" = BoundaryBehaviour.ABSORBING) -> "CevModel":
        """Build a model with xi = c * y0^(1/2 - p)."""
        return cls(y0=y0, xi=c * y0 ** (0.5 - p), t=t, p=p, boundary=BoundaryBehaviour.parse(boundary))

    @property
    def is_lognormal(self) -> bool:
        return abs(self.p - 1.0) < P_ONE_TOL

    @property
    def has_atom(self) -> bool:
        return self.p < 1 and not self.is_lognormal and (
            self.p >= 0.5 or self.boundary is BoundaryBehaviour.ABSORBING)

    @property
    def constants(self) -> CevConstants:
        eta = math.nan if self.is_lognormal else 1.0 / (2.0 * (self.p - 1.0))
        return CevConstants(eta=eta, mu=math.log(self.y0) - 0.5 * self.xi ** 2 * self.t)

    @property
    def bessel_order(self) -> float:
        if self.is_lognormal:
            raise DomainError("no Bessel kernel at p = 1")
        eta = self.constants.eta
        return -eta if self.has_atom else eta

    # shorthand used across the package
    @property
    def _q(self) -> float:
        return 1.0 - self.p

    @property
    def _c(self) -> float:
        return self.xi ** 2 * self.t * (1.0 - self.p) ** 2

    @property
    def s2(self) -> float:
        """xi^2 t."""
        return self.xi ** 2 * self.t


def mass_at_zero(model: CevModel) -> float:
    """Probability that the variance sits exactly at zero at time t."""
    if not model.has_atom:
        return 0.0
    x = model.y0 ** (2 * model._q) / (2 * model._c)
    return float(upper_gamma_reg(-model.constants.eta, x))


def log_density(model: CevModel, y):
    """Log of the continuous part of the law, vectorised over ``y > 0``."""
    y_in = np.asarray(y, dtype=float)
    if np.any(~(y_in > 0)):
        raise DomainError("density requires y > 0")
    out = _log_density_unchecked(model, y_in)
    return out if out.ndim else float(out)


def _log_density_unchecked(model: CevModel, y: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ly = np.log(y)
        if model.is_lognormal:
            s2 = model.s2
            mu = model.constants.mu
            return -0.5 * np.log(2 * np.pi * s2) - ly - (ly - mu) ** 2 / (2 * s2)
        q, c = model._q, model._c
        a = np.exp(q * ly)
        b = model.y0 ** q
        x = a * b / c
        out = (0.5 * math.log(model.y0) + (0.5 - 2 * model.p) * ly
               - math.log(abs(q) * model.s2) - (a - b) ** 2 / (2 * c))
        bes = np.full_like(x, -np.inf)
        ok = np.isfinite(x)
        if np.any(ok):
            bes[ok] = log_bessel_i(model.bessel_order, x[ok], scaled=True)
        out = out + bes
        return np.where(np.isnan(out), -np.inf, out)


def density(model: CevModel, y):
    """Density of the continuous part (excludes the atom at zero)."""
    out = np.exp(log_density(model, y))
    return out if np.ndim(out) else float(out)


def small_y_law(model: CevModel):
    """``(c0, s)`` with density(y) ~ c0 * y^s as y -> 0, or None when p >= 1."""
    if model.p >= 1 or model.is_lognormal:
        return None
    nu = model.bessel_order
    c2 = 2 * model._c
    logc = (-model.y0 ** (2 * model._q) / c2 - math.log(abs(model._q) * model.s2)
            - gammaln(nu + 1) - nu * math.log(c2))
    if model.has_atom:
        return model.y0 * math.exp(logc), 1.0 - 2 * model.p
    return math.exp(logc), -2 * model.p


def chi(model: CevModel, tau: float) -> float:
    """chi(tau, p), the scale of the y^{-2p} tail for p > 1."""
    if not model.p > 1 or model.is_lognormal:
        raise DomainError("chi is defined for p > 1")
    eta = abs(model.constants.eta)
    c2 = 2 * model._c
    return math.exp(2 * model.p * math.log(tau) - math.log(abs(model._q) * model.s2)
                    - gammaln(1 + eta) - eta * math.log(c2) - model.y0 ** (2 * model._q) / c2)


def density_bounds_p_gt_1(model: CevModel, y, tau: float):
    """Lower and upper bounds on density(y / tau) for p > 1."""
    y = np.asarray(y, dtype=float)
    c = model._c
    pm1 = model.p - 1
    base = chi(model, tau) / y ** (2 * model.p)
    r2 = (tau / y) ** (2 * pm1) / (2 * c)
    r1 = (tau / (y * model.y0)) ** pm1 / c
    lower = base * (1 - r2)
    upper = base * (1 + math.exp(model.y0 ** (-2 * pm1) / (2 * c)) * (r2 + r1))
    return lower, upper


def _support_guess(model: CevModel) -> tuple[float, float]:
    """A rough [log y_lo, log y_hi] holding the bulk of the law."""
    if model.is_lognormal:
        mu, s = model.constants.mu, math.sqrt(model.s2)
        return mu - 10 * s, mu + 10 * s
    q, c = model._q, model._c
    b = model.y0 ** q
    edge = math.log(b + 10 * math.sqrt(c)) / q
    ly0 = math.log(model.y0)
    if q > 0:
        return ly0 - 20.0, edge
    return edge, ly0 + 10.0


def expectation(
    model: CevModel,
    log_g: Callable[[np.ndarray], "np.ndarray | tuple[np.ndarray, np.ndarray]"],
    cfg: QuadratureConfig | None = None,
    *,
    signed: bool = False,
    support: tuple[float, float] | None = None,
) -> ScaledIntegral:
    """Integral of g(y) * density(y) over y > 0, excluding the atom.

    ``log_g(y)`` returns log|g| (and the sign of g when ``signed``).  The
    integral runs in u = log y.
    """
    cfg = cfg or QuadratureConfig()
    lo, hi = support if support is not None else _support_guess(model)

    def logf(u):
        y = np.exp(u)
        ld = _log_density_unchecked(model, y) + u
        if signed:
            lg, sg = log_g(y)
            return ld + lg, sg
        return ld + log_g(y)

    return integrate_log_axis(logf, lo, hi, cfg, signed=signed)


def moment_is_finite(model: CevModel, r: float) -> bool:
    """Whether E(V^r) is finite, decided from the analytic tail and origin laws."""
    if r == 0:
        return True
    if r < 0 and mass_at_zero(model) > 0:
        return False
    law = small_y_law(model)
    if law is not None and not r + law[1] > -1:
        return False
    if model.p > 1 and not model.is_lognormal and not r < 2 * model.p - 1:
        return False
    return True


def moment(model: CevModel, r: float, cfg: QuadratureConfig | None = None) -> float:
    """E(V^r) including the atom; ``math.inf`` flags an infinite moment."""
    if r == 0:
        return 1.0
    if not moment_is_finite(model, r):
        return math.inf
    res = expectation(model, lambda y: r * np.log(y), cfg)
    return res.value
