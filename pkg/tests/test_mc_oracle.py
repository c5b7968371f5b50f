import math

import numpy as np
import pytest

from conftest import ref_model
from cevsmile.cev_dist import BoundaryBehaviour, moment
from cevsmile.errors import DomainError, RegimeNotSupported
from cevsmile.mc_oracle import (
    RNG_ALGORITHM,
    ks_euler_vs_exact,
    mc_call_price,
    mc_price_from_samples,
    sample_euler,
    sample_exact_half,
    validated_euler_steps,
)
from cevsmile.pricer import call_price

REF = BoundaryBehaviour.REFLECTING


def test_exact_sampler_atom_and_mean():
    m = ref_model(0.5)
    n = 400_000
    v = sample_exact_half(m, n, seed=7)
    frac = np.mean(v == 0)
    se = math.sqrt(math.exp(-7) * (1 - math.exp(-7)) / n)
    assert abs(frac - math.exp(-7)) < 3 * se
    # V is a martingale for p = 1/2
    assert v.mean() == pytest.approx(0.07, abs=4 * v.std() / math.sqrt(n))
    assert np.sqrt(v).mean() == pytest.approx(moment(m, 0.5), abs=4 * np.sqrt(v).std() / math.sqrt(n))


def test_exact_sampler_rejects_other_models():
    with pytest.raises(RegimeNotSupported):
        sample_exact_half(ref_model(1.0), 10, 0)
    with pytest.raises(DomainError):
        sample_exact_half(ref_model(0.5), 0, 0)


def test_determinism_and_seed_sensitivity():
    m = ref_model(0.5)
    a = sample_exact_half(m, 70_000, seed=3)
    assert np.array_equal(a, sample_exact_half(m, 70_000, seed=3))
    assert not np.array_equal(a, sample_exact_half(m, 70_000, seed=4))
    e = sample_euler(m, 1000, steps=200, seed=3)
    assert np.array_equal(e, sample_euler(m, 1000, steps=200, seed=3))
    assert "PCG64" in RNG_ALGORITHM


def test_euler_matches_exact_law():
    m = ref_model(0.5)
    stat, crit = ks_euler_vs_exact(m, 100_000, 2000, seed=5)
    assert stat < crit
    assert validated_euler_steps(m, n=100_000, seed=5) == 2000
    assert validated_euler_steps(ref_model(1.0)) == 2000


def test_euler_lognormal_mean():
    m = ref_model(1.0)
    v = sample_euler(m, 100_000, steps=500, seed=9)
    assert v.mean() == pytest.approx(0.07, abs=4 * v.std() / math.sqrt(v.size))
    assert np.all(v > 0)


def test_euler_boundaries():
    v = sample_euler(ref_model(0.0, REF), 20_000, steps=500, seed=1)
    assert np.all(v > 0)
    a = sample_euler(ref_model(0.0), 20_000, steps=500, seed=1)
    assert np.any(a == 0)
    with pytest.raises(DomainError):
        sample_euler(ref_model(0.5), 10, steps=50)


def test_euler_price_against_quadrature_p_above_one():
    m = ref_model(1.5)
    est = mc_call_price(m, 0.05, 1.0, 100_000, seed=2, sampler="euler", steps=1000)
    assert abs(est.value - call_price(m, 0.05, 1.0)) < 4 * est.std_error


def test_standard_error_scales_like_inverse_root_n():
    m = ref_model(0.5)
    small = mc_call_price(m, 0.0, 1.0, 10_000, seed=1)
    big = mc_call_price(m, 0.0, 1.0, 1_000_000, seed=1)
    assert small.std_error / big.std_error == pytest.approx(10.0, rel=0.05)
    assert abs(big.value - call_price(m, 0.0, 1.0)) < 4 * big.std_error


def test_price_from_samples_edge_cases():
    v = np.array([0.0, 0.04, math.inf])
    est = mc_price_from_samples(v, -0.2, 1.0)
    intr = 1 - math.exp(-0.2)
    assert est.zero_fraction == pytest.approx(1 / 3)
    assert est.value > intr
    # deep in the money every finite draw is worth the intrinsic value
    deep = mc_price_from_samples(np.array([0.0, 0.04]), -40.0, 1.0)
    assert deep.value == pytest.approx(1 - math.exp(-40), rel=1e-15)
    with pytest.raises(DomainError):
        mc_call_price(ref_model(0.5), 0.0, 1.0, 10, 0, sampler="sobol")
