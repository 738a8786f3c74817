import math

import numpy as np
import pytest

from maxstein.measures import AngularMeasure, DomainError, MaxStableLaw, cdf, exponent_complement
from maxstein.sampling import RngStream, exact_from
from maxstein.semigroup import (PLUS, GeneratorQuery, SemigroupQuery, generator_apply, generator_bank,
                                indicator_entry_time, jump_apply, jump_bank, jump_indicator, semigroup_chaos,
                                semigroup_indicator, semigroup_mc)
from maxstein.testfunctions import BoxIndicator, CallableFunction, ClipMean, Constant, smooth_bank

from conftest import random_law

REPS = 200_000


def scaled_box(c, w):
    box = BoxIndicator(w)
    return CallableFunction(lambda y: c * box.value(y), box.gradient, box.ray_breaks, name="box", smooth=False)


# closed forms ------------------------------------------------------------------

def test_indicator_examples(dep2):
    one = np.ones(2)
    assert semigroup_indicator(SemigroupQuery(dep2, 0.0, [0.5, 1.0]), one) == 1.0
    assert cdf(dep2, one) == pytest.approx(math.exp(-1))
    v = semigroup_indicator(SemigroupQuery(dep2, math.log(2), one), one)
    assert v == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert semigroup_indicator(SemigroupQuery(dep2, 0.99 * math.log(2), [2.0, 1.0]), one) == 0.0
    assert indicator_entry_time(1.0, [2.0, 1.0], one) == pytest.approx(math.log(2))


def test_indicator_semigroup_property(indep2):
    z = np.array([0.8, 1.7])
    x = np.array([1.1, 0.4])
    F = cdf(indep2, z)
    for s, t in [(0.3, 0.5), (1.0, 2.0), (0.05, 4.0)]:
        ps = semigroup_indicator(SemigroupQuery(indep2, s, x * 0), z)
        w = math.exp(s / indep2.alpha) * z
        # P_s 1_[0,z] = F^{1-e^-s} 1_[0,w], so P_t P_s 1_[0,z](x) = F^{1-e^-s} P_t 1_[0,w](x)
        composed = ps * semigroup_indicator(SemigroupQuery(indep2, t, x), w)
        direct = semigroup_indicator(SemigroupQuery(indep2, s + t, x), z)
        assert composed == pytest.approx(direct, abs=1e-12)
        assert direct == pytest.approx(F ** (-math.expm1(-(s + t))), abs=1e-12)


def test_commutation_on_indicators():
    rng = np.random.default_rng(3)
    for _ in range(50):
        law = random_law(rng)
        d = law.dimension
        z = rng.uniform(0.3, 3.0, d)
        t = float(rng.uniform(0.01, 3.0))
        x = z * math.exp(t / law.alpha) * rng.uniform(0.1, 1.6, d)
        c = semigroup_indicator(SemigroupQuery(law, t, np.zeros(d)), z)
        w = math.exp(t / law.alpha) * z
        lhs = c * jump_indicator(law, x, w)  # D P_t 1_[0,z], since P_t 1_[0,z] = c 1_[0,w]
        rhs = -exponent_complement(law, z) * semigroup_indicator(SemigroupQuery(law, t, x), z)
        assert lhs == pytest.approx(math.exp(-t) * rhs, abs=1e-10)


# Monte Carlo -------------------------------------------------------------------

def test_mc_at_time_zero(mix2):
    h = ClipMean(1.0)
    x = np.array([0.7, 2.0])
    est = semigroup_mc(SemigroupQuery(mix2, 0.0, x), h, RngStream(1), 1000)
    assert est.std_error == 0.0 and est.value == pytest.approx(float(h.value(x)))
    chaos = semigroup_chaos(SemigroupQuery(mix2, 0.0, x), h, RngStream(1), 1000)
    assert chaos.std_error == 0.0 and chaos.value == pytest.approx(float(h.value(x)))


def test_mc_ergodic_limit(indep2):
    h = ClipMean(1.0)
    est = semigroup_mc(SemigroupQuery(indep2, 30.0, np.array([5.0, 0.1])), h, RngStream(2), REPS)
    z = exact_from(RngStream(99).generator(), indep2, REPS)
    ref = h.value(z)
    se = math.hypot(est.std_error, ref.std() / math.sqrt(REPS))
    assert abs(est.value - ref.mean()) <= 4 * se


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_mc_and_chaos_match_indicator(dep2, t):
    z = np.array([1.0, 1.5])
    x = np.array([0.9, 1.2])
    q = SemigroupQuery(dep2, t, x)
    exact = semigroup_indicator(q, z)
    h = BoxIndicator(z)
    mc = semigroup_mc(q, h, RngStream(3), REPS)
    ch = semigroup_chaos(q, h, RngStream(4), REPS)
    assert abs(mc.value - exact) <= 4 * mc.std_error
    assert abs(ch.value - exact) <= 4 * ch.std_error


def test_chaos_poisson_mean(mix2):
    x = np.array([0.8, 1.3])
    q = SemigroupQuery(mix2, 0.7, x)
    _, n = semigroup_chaos(q, Constant(1.0), RngStream(5), REPS, return_counts=True)
    expected = q.gamma * exponent_complement(mix2, x)
    assert abs(n.value - expected) <= 4 * n.std_error


def test_chaos_needs_positive_x(indep2):
    with pytest.raises(DomainError):
        semigroup_chaos(SemigroupQuery(indep2, 1.0, np.array([0.0, 1.0])), Constant(), RngStream(0), 10)


def test_query_validation(indep2):
    with pytest.raises(ValueError):
        SemigroupQuery(indep2, -1.0, np.ones(2))
    with pytest.raises(ValueError):
        SemigroupQuery(indep2, 1.0, np.ones(3))
    with pytest.raises(DomainError):
        GeneratorQuery(indep2, np.array([1.0, 0.0]))


def test_gradient_envelope(indep2):
    # common random numbers: the same Z at x +- e
    t, x, step = 0.4, np.array([0.9, 1.4]), 1e-3
    a, b = math.exp(-t / indep2.alpha), (-math.expm1(-t)) ** (1 / indep2.alpha)
    z = exact_from(RngStream(6).generator(), indep2, REPS)
    gamma = math.expm1(t)
    for h in smooth_bank(2):
        for j in range(2):
            e = np.zeros(2)
            e[j] = step
            diff = (h.value(np.maximum(a * (x + e), b * z)) - h.value(np.maximum(a * (x - e), b * z))) / (2 * step)
            se = diff.std() / math.sqrt(REPS)
            bound = a * math.exp(-gamma * x[j] ** -indep2.alpha)
            assert abs(diff.mean()) <= bound + 3 * se, (h.name, j)


# generator ---------------------------------------------------------------------

def test_generator_of_constant(mix2):
    assert generator_apply(GeneratorQuery(mix2, np.array([0.3, 2.0])), Constant(4.0)) == 0.0


def test_jump_of_indicator_inside():
    rng = np.random.default_rng(7)
    for _ in range(20):
        law = random_law(rng)
        z = rng.uniform(0.5, 2.0, law.dimension)
        x = z * rng.uniform(0.1, 0.95, law.dimension)
        val, _ = jump_apply(GeneratorQuery(law, x), BoxIndicator(z))
        assert val == pytest.approx(-exponent_complement(law, z), rel=1e-8, abs=1e-10)
        assert jump_indicator(law, x, z) == -exponent_complement(law, z)


def test_forward_equation_on_indicators():
    rng = np.random.default_rng(8)
    h = 1e-5
    for _ in range(20):
        law = random_law(rng)
        d = law.dimension
        z = rng.uniform(0.5, 2.0, d)
        t = float(rng.uniform(0.2, 2.0))
        w = math.exp(t / law.alpha) * z
        x = w * rng.uniform(0.2, 0.9, d)
        fd = (semigroup_indicator(SemigroupQuery(law, t + h, x), z)
              - semigroup_indicator(SemigroupQuery(law, t - h, x), z)) / (2 * h)
        c = semigroup_indicator(SemigroupQuery(law, t, np.zeros(d)), z)
        gen = generator_apply(GeneratorQuery(law, x), scaled_box(c, w))
        assert fd == pytest.approx(gen, rel=1e-6)


def test_jump_bank_matches_adaptive(mix2):
    rng = np.random.default_rng(9)
    x = np.exp(rng.uniform(-2, 2, (6, 2)))
    bank = smooth_bank(2)
    fine = jump_bank(mix2, x, bank, nodes=64, density=30.0)
    coarse = jump_bank(mix2, x, bank)
    for i, xi in enumerate(x):
        ref = [jump_apply(GeneratorQuery(mix2, xi), h)[0] for h in bank]
        np.testing.assert_allclose(fine[i], ref, atol=1e-7)
        np.testing.assert_allclose(coarse[i], ref, rtol=1e-2, atol=1e-4)  # default budget, vetted against MC noise


def test_generator_bank_matches_pointwise(indep2):
    x = np.array([[0.5, 1.5], [2.0, 0.3]])
    bank = smooth_bank(2)
    full = generator_bank(indep2, x, bank, nodes=64, density=30.0)
    for i, xi in enumerate(x):
        ref = [generator_apply(GeneratorQuery(indep2, xi), h) for h in bank]
        np.testing.assert_allclose(full[i], ref, atol=1e-7)


def test_drift_sign_changes_generator(indep2):
    q = GeneratorQuery(indep2, np.array([0.5, 1.5]))
    h = ClipMean(1.0)
    minus, plus = generator_apply(q, h), generator_apply(q, h, drift_sign=PLUS)
    drift = float(np.sum(q.x * h.gradient(q.x))) / indep2.alpha
    assert minus - plus == pytest.approx(-2 * drift)


def test_stein_identity_small(mix2):
    z = exact_from(RngStream(10).generator(), mix2, 50_000)
    vals = generator_bank(mix2, z, smooth_bank(2))
    se = vals.std(axis=0) / math.sqrt(len(z))
    assert np.all(np.abs(vals.mean(axis=0)) <= 4 * se)
