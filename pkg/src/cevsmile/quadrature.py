"""Vectorised global adaptive Gauss-Kronrod (G10/K21) quadrature.

Two layers live here:

* :func:`adaptive_gk` integrates a vectorised real function over a finite
  interval, refining the panels that carry the largest error estimates
  (QUADPACK's error heuristic, applied in batches so numpy does the work).
* :func:`integrate_log_axis` integrates ``exp(logf(u))`` over the real line
  for integrands supplied in log form.  It locates the peak, rescales by it
  so prices as small as e^-600 stay representable, grows the range until the
  integrand has decayed far enough below its peak on both sides (set by
  ``tail_mass_tol``), and places extra breakpoints around the peak.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, ToleranceNotMet

__all__ = [
    "QuadratureConfig",
    "ScaledIntegral",
    "adaptive_gk",
    "integrate_log_axis",
    "XGK",
    "WGK",
    "WG",
]

# 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452438,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
# Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_NODES = np.concatenate([-XGK[:-1], XGK[::-1]])  # 21 abscissae on [-1, 1]
_KW = np.concatenate([WGK[:-1], WGK[::-1]])
_GW = np.zeros(21)
_GW[[1, 3, 5, 7, 9]] = WG
_GW[[19, 17, 15, 13, 11]] = WG

_EPS = np.finfo(float).eps
_U_LIMIT = 700.0


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the mixture integrals.

    ``rel_tol`` and ``abs_tol`` drive the adaptive refinement,
    ``max_subdivisions`` caps the number of panels and ``tail_mass_tol``
    bounds the density mass discarded by range truncation.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 2000
    tail_mass_tol: float = 1e-14

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "tail_mass_tol"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v}")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 10:
            raise DomainError("max_subdivisions must be an integer >= 10")


def _gk21(f: Callable, a: np.ndarray, b: np.ndarray):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise FloatingPointError("integrand returned non-finite values")
    kron = h * (fx @ _KW)
    gauss = h * (fx @ _GW)
    resabs = np.abs(h) * (np.abs(fx) @ _KW)
    mean = kron / np.where(h != 0, 2 * h, 1.0)
    resasc = np.abs(h) * (np.abs(fx - mean[:, None]) @ _KW)
    err = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > np.finfo(float).tiny / (50 * _EPS), np.maximum(err, floor), err)
    return kron, err


def adaptive_gk(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    breakpoints: Sequence[float] = (),
    rel_tol: float = 1e-10,
    abs_tol: float = 0.0,
    limit: int = 2000,
) -> tuple[float, float, int]:
    """Integrate a vectorised ``f`` over [a, b].

    Returns ``(value, error_estimate, n_panels)``.  Raises
    :class:`ToleranceNotMet` when ``limit`` panels do not reach
    ``max(abs_tol, rel_tol*|value|)``.
    """
    if not (math.isfinite(a) and math.isfinite(b)) or b <= a:
        raise DomainError(f"need finite a < b, got [{a}, {b}]")
    pts = np.unique(np.clip(np.asarray(list(breakpoints), dtype=float), a, b))
    edges = np.unique(np.concatenate([[a], pts, [b]]))
    lo, hi = edges[:-1], edges[1:]
    val, err = _gk21(f, lo, hi)
    while True:
        total = float(val.sum())
        toterr = float(err.sum())
        tol = max(abs_tol, rel_tol * abs(total))
        if toterr <= tol:
            return total, toterr, len(lo)
        splittable = (hi - lo) > 64 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        order = np.argsort(-np.where(splittable, err, -1.0))
        cum = np.cumsum(err[order])
        # smallest prefix (by error) whose removal leaves at most tol/2
        n_pick = int(np.searchsorted(cum, toterr - 0.5 * tol)) + 1
        pick = order[:n_pick]
        pick = pick[splittable[pick]]
        if pick.size == 0:
            # roundoff-limited: nothing left that can be refined
            return total, toterr, len(lo)
        if len(lo) + pick.size > limit:
            raise ToleranceNotMet(
                f"adaptive quadrature: {len(lo)} panels, error {toterr:.3e} > tolerance {tol:.3e}"
            )
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        nv, ne = _gk21(f, new_lo, new_hi)
        keep = np.ones(len(lo), dtype=bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])


@dataclass(frozen=True)
class ScaledIntegral:
    """An integral held as ``mantissa * exp(log_scale)``."""

    mantissa: float
    log_scale: float
    rel_error: float
    panels: int

    @property
    def value(self) -> float:
        if self.mantissa == 0.0:
            return 0.0
        return self.mantissa * math.exp(self.log_scale) if self.log_scale < 709 else math.copysign(math.inf, self.mantissa)

    @property
    def log_abs(self) -> float:
        return math.log(abs(self.mantissa)) + self.log_scale if self.mantissa != 0 else -math.inf

    @property
    def sign(self) -> float:
        return math.copysign(1.0, self.mantissa) if self.mantissa != 0 else 0.0


LogIntegrand = Callable[[np.ndarray], "tuple[np.ndarray, np.ndarray] | np.ndarray"]


def _split(res):
    if isinstance(res, tuple):
        la, sg = res
        return np.asarray(la, dtype=float), np.asarray(sg, dtype=float)
    la = np.asarray(res, dtype=float)
    return la, np.ones_like(la)


def integrate_log_axis(
    logf: LogIntegrand,
    lo: float,
    hi: float,
    cfg: QuadratureConfig,
    *,
    signed: bool = False,
    grid: int = 257,
) -> ScaledIntegral:
    """Integrate ``sign(u)*exp(logabs(u))`` over the real line.

    ``logf(u)`` returns ``logabs`` or, with ``signed=True``, a tuple
    ``(logabs, sign)``.  ``[lo, hi]`` is an initial guess of the effective
    support; it is widened until the integrand has dropped
    ``log(1/tail_mass_tol) + 20`` nats below its peak at both ends and then
    trimmed to that region.  Whatever lies
    beyond the final ends is added by extrapolating the local exponential
    decay rate, which is exact for power-law tails in ``u = log y``.
    """
    if not hi > lo:
        raise DomainError("empty integration range")
    drop = max(30.0, 20.0 - math.log(cfg.tail_mass_tol))

    def ev(u):
        la, sg = _split(logf(np.asarray(u, dtype=float)))
        la = np.where(np.isnan(la), -np.inf, la)
        return la, sg

    # widen until both ends are negligible relative to the running peak
    for _ in range(60):
        u = np.linspace(lo, hi, grid)
        la, _sg = ev(u)
        peak = float(np.max(la))
        if not math.isfinite(peak):
            if peak == math.inf:
                raise FloatingPointError("integrand overflows in log space")
            lo, hi = max(lo - (hi - lo), -_U_LIMIT), min(hi + (hi - lo), _U_LIMIT)
            if lo <= -_U_LIMIT and hi >= _U_LIMIT:
                return ScaledIntegral(0.0, 0.0, 0.0, 0)
            continue
        ipk = int(np.argmax(la))
        grown = False
        if la[0] > peak - drop and lo > -_U_LIMIT:
            lo = max(-_U_LIMIT, lo - max(1.0, u[ipk] - lo))
            grown = True
        if la[-1] > peak - drop and hi < _U_LIMIT:
            hi = min(_U_LIMIT, hi + max(1.0, hi - u[ipk]))
            grown = True
        if not grown:
            break

    # trim to the region that matters
    live = np.nonzero(la >= peak - drop)[0]
    i0, i1 = max(live[0] - 1, 0), min(live[-1] + 1, grid - 1)
    lo, hi = float(u[i0]), float(u[i1])
    step = u[1] - u[0]

    # refine the peak and estimate its width
    a = u[max(ipk - 1, 0)]
    b = u[min(ipk + 1, grid - 1)]
    upk = float(u[ipk])
    if b > a:
        opt = minimize_scalar(lambda s: -float(ev(np.array([s]))[0][0]), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-9 * max(1.0, abs(upk))})
        if -opt.fun >= peak:
            upk, peak = float(opt.x), float(-opt.fun)
    h = max(step * 1e-2, 1e-6)
    l3, _ = ev(np.array([upk - h, upk, upk + h]))
    curv = -(l3[0] - 2 * l3[1] + l3[2]) / (h * h)
    width = 1.0 / math.sqrt(curv) if curv > 0 and math.isfinite(curv) else step
    width = min(width, hi - lo)

    bps = [upk + width * m for m in (-12, -6, -3, -1.5, -0.5, 0.5, 1.5, 3, 6, 12)]
    bps += list(np.linspace(lo, hi, 9)[1:-1])
    bps = sorted(x for x in bps if lo < x < hi)

    def g(x):
        la_, sg_ = ev(x)
        return sg_ * np.exp(la_ - peak)

    tol_abs = cfg.abs_tol * math.exp(-peak) if -700 < peak < 700 else 0.0
    val, err, npan = adaptive_gk(g, lo, hi, breakpoints=bps, rel_tol=cfg.rel_tol,
                                 abs_tol=min(tol_abs, 1e300), limit=cfg.max_subdivisions)

    # exponential extrapolation past each end
    d = max(step * 1e-2, 1e-6)
    ends, _ = ev(np.array([lo, lo + d, hi - d, hi]))
    sg_ends = ev(np.array([lo, hi]))[1]
    for la_end, la_in, sgn in ((ends[0], ends[1], sg_ends[0]), (ends[3], ends[2], sg_ends[1])):
        if math.isfinite(la_end):
            rate = (la_in - la_end) / d  # positive when decaying outward
            if rate > 0:
                val += sgn * math.exp(la_end - peak) / rate

    rel = err / abs(val) if val != 0 else 0.0
    return ScaledIntegral(float(val), peak, rel, npan)
