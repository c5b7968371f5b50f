"""Monte-Carlo samplers for the variance law and mixing price estimates.

Given the variance draw the option price is Black-Scholes, so an estimate
only needs samples of V; no log-price paths are simulated.

Random streams: one ``numpy.random.SeedSequence`` per call, spawned into
fixed-size chunks each driving its own PCG64 generator.  A chunk's draws
depend only on (seed, chunk index), so results do not depend on how the
chunks are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.stats import ks_2samp

from .bsm import _log_otm_total
from .cev_dist import BoundaryBehaviour, CevModel
from .errors import DomainError, RegimeNotSupported

__all__ = [
    "McEstimate",
    "RNG_ALGORITHM",
    "CHUNK",
    "DEFAULT_STEPS",
    "sample_exact_half",
    "sample_euler",
    "mc_price_from_samples",
    "mc_call_price",
    "ks_euler_vs_exact",
    "validated_euler_steps",
]

RNG_ALGORITHM = "PCG64 chunks spawned from SeedSequence"
CHUNK = 1 << 16
DEFAULT_STEPS = 2000


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n: int
    zero_fraction: float


def _streams(seed: int, n: int):
    """Yield (start, stop, Generator) chunks covering range(n)."""
    if n <= 0:
        raise DomainError("sample count must be positive")
    nchunks = -(-n // CHUNK)
    children = np.random.SeedSequence(seed).spawn(nchunks)
    for i, ss in enumerate(children):
        yield i * CHUNK, min(n, (i + 1) * CHUNK), np.random.Generator(np.random.PCG64(ss))


def sample_exact_half(model: CevModel, n: int, seed: int) -> np.ndarray:
    """Exact draws of V for p = 1/2 with an absorbing origin.

    X = 4V/xi^2 is a zero-dimensional squared Bessel process, and X_t given
    X_0 is a Poisson(lambda/2) mixture of Gamma(N, 2t) laws with
    lambda = 4 y0 / (xi^2 t).  N = 0 gives an exact zero.
    """
    if abs(model.p - 0.5) > 1e-12 or model.boundary is not BoundaryBehaviour.ABSORBING:
        raise RegimeNotSupported("exact sampler needs p = 1/2 with an absorbing origin")
    lam = 4 * model.y0 / model.s2
    out = np.empty(int(n))
    for a, b, rng in _streams(seed, int(n)):
        counts = rng.poisson(lam / 2, b - a)
        out[a:b] = rng.gamma(counts, 2 * model.t) * (model.xi ** 2 / 4)
    return out


# power codes for the diffusion coefficient, so the hot loop avoids pow()
_POW_GENERIC, _POW_ZERO, _POW_EIGHTH, _POW_HALF, _POW_ONE, _POW_THREE_HALVES = range(6)


def _pow_code(p: float) -> int:
    for code, val in ((_POW_ZERO, 0.0), (_POW_EIGHTH, 0.125), (_POW_HALF, 0.5),
                      (_POW_ONE, 1.0), (_POW_THREE_HALVES, 1.5)):
        if abs(p - val) < 1e-12:
            return code
    return _POW_GENERIC


@numba.njit(cache=True)
def _ypow(y, p, code):
    if code == 1:
        return 1.0
    if code == 2:
        return math.sqrt(math.sqrt(math.sqrt(y)))
    if code == 3:
        return math.sqrt(y)
    if code == 4:
        return y
    if code == 5:
        return y * math.sqrt(y)
    return y ** p


@numba.njit(cache=True)
def _euler_fill(out, rng, y0, vol, p, code, steps, reflecting):
    # paths advance in blocks, step-major, so the per-path dependency chains
    # of neighbouring paths overlap in the pipeline
    block = 64
    for start in range(0, out.size, block):
        stop = min(out.size, start + block)
        ys = out[start:stop]
        ys[:] = y0
        for _ in range(steps):
            for j in range(ys.size):
                y = ys[j]
                if y > 0.0 and y < math.inf:
                    y = y + vol * _ypow(y, p, code) * rng.standard_normal()
                    if y <= 0.0:
                        y = -y if reflecting else 0.0
                    elif not y < math.inf:
                        y = math.inf
                    ys[j] = y


def sample_euler(model: CevModel, n: int, steps: int = DEFAULT_STEPS, seed: int = 0) -> np.ndarray:
    """Euler-Maruyama draws of Y_t with full truncation at the origin.

    An absorbed path stays at 0; with a reflecting origin a negative step is
    mirrored.  For p >= 1 the origin is unattainable in continuous time and
    a discretisation overshoot is absorbed.  A path that overflows is
    returned as ``inf``.
    """
    steps = int(steps)
    if steps < 100:
        raise DomainError("Euler scheme needs at least 100 steps")
    dt = model.t / steps
    reflecting = model.boundary is BoundaryBehaviour.REFLECTING and model.p < 0.5
    code = _pow_code(model.p)
    out = np.empty(int(n))
    for a, b, rng in _streams(seed, int(n)):
        _euler_fill(out[a:b], rng, float(model.y0), model.xi * math.sqrt(dt), float(model.p), code, steps, reflecting)
    return out


def mc_price_from_samples(samples: np.ndarray, k: float, tau: float) -> McEstimate:
    """Average of BS(k, V_i, tau) over the given variance draws."""
    if not tau > 0:
        raise DomainError("maturity must be positive")
    v = np.asarray(samples, dtype=float)
    intr = -math.expm1(k) if k < 0 else 0.0
    with np.errstate(invalid="ignore", over="ignore"):
        s = np.sqrt(v * tau)
        tv = np.exp(_log_otm_total(np.full(v.shape, float(k)), s))
    price = intr + tv
    price[np.isinf(v)] = 1.0
    n = v.size
    sd = float(price.std(ddof=1)) if n > 1 else math.inf
    return McEstimate(value=float(price.mean()), std_error=sd / math.sqrt(n), n=n,
                      zero_fraction=float(np.count_nonzero(v == 0.0)) / n)


def mc_call_price(model: CevModel, k: float, tau: float, n: int, seed: int,
                  sampler: str = "exact", steps: int = DEFAULT_STEPS) -> McEstimate:
    """Mixing estimate of the call price with strike e^k."""
    if sampler == "exact":
        v = sample_exact_half(model, n, seed)
    elif sampler == "euler":
        v = sample_euler(model, n, steps, seed)
    else:
        raise DomainError(f"unknown sampler {sampler!r}")
    return mc_price_from_samples(v, k, tau)


def ks_euler_vs_exact(model: CevModel, n: int, steps: int, seed: int):
    """Two-sample KS statistic and its 1% critical value."""
    a = sample_euler(model, n, steps, seed)
    b = sample_exact_half(model, n, seed + 1)
    stat = ks_2samp(a, b).statistic
    crit = 1.628 * math.sqrt(2.0 / n)
    return float(stat), crit


def validated_euler_steps(model: CevModel, n: int = 100_000, seed: int = 0,
                          steps: int = DEFAULT_STEPS, max_doublings: int = 3) -> int:
    """Smallest steps = DEFAULT_STEPS * 2^j passing the KS check against the exact sampler.

    Only p = 1/2 absorbing has an exact sampler; other models get ``steps`` back.
    """
    if abs(model.p - 0.5) > 1e-12 or model.boundary is not BoundaryBehaviour.ABSORBING:
        return steps
    for _ in range(max_doublings + 1):
        stat, crit = ks_euler_vs_exact(model, n, steps, seed)
        if stat < crit:
            return steps
        steps *= 2
    raise RegimeNotSupported("Euler scheme failed the KS check at every step count tried")
