import math

import numpy as np
import pytest
from scipy import integrate as spi
from scipy import stats

from cylevy.levy_measure import CompoundPoissonSymmetric, StableFamily, TableDensity, TemperedStable, psi
from cylevy.numerics import empirical_cf, ks_distance
from cylevy.ou1d import (
    OUParams,
    StableLaw,
    cf_convolution,
    convolution_scale,
    invariant_scale,
    ou_step_exact_stable,
    ou_step_general,
    sas_sample,
    small_jump_variance,
    standard_sas_cdf,
)


def gil_pelaez(x, alpha):
    # F(x) = 1/2 + (1/pi) int_0^inf sin(x h) exp(-h^alpha) / h dh
    if x == 0:
        return 0.5
    f = lambda h: math.exp(-h ** alpha) / h if h > 0 else 0.0  # noqa: E731
    head = spi.quad(lambda h: math.sin(x * h) * f(h), 0, 1, epsabs=1e-13, limit=400)[0]
    tail = spi.quad(f, 1, np.inf, weight="sin", wvar=x, epsabs=1e-13)[0]
    return 0.5 + (head + tail) / math.pi


def test_sas_sample_zero_scale_is_exact_zero():
    rng = np.random.default_rng(0)
    assert sas_sample(1.3, 0.0, rng) == 0.0
    assert np.all(sas_sample(0.7, 0.0, rng, size=5) == 0.0)


def test_cauchy_quartiles():
    M = 100_000
    x = sas_sample(1.0, 1.0, np.random.default_rng(1), size=M)
    q1, q3 = np.quantile(x, [0.25, 0.75])
    tol = 3 * 2.0 / math.sqrt(M)
    assert abs(q1 + 1) <= tol and abs(q3 - 1) <= tol


@pytest.mark.parametrize("alpha, sigma", [(0.6, 1.0), (1.5, 0.7), (1.9, 2.0)])
def test_sample_cf(alpha, sigma):
    M = 100_000
    x = sas_sample(alpha, sigma, np.random.default_rng(2), size=M)
    for h in (0.5, 1.0):
        assert abs(empirical_cf(x, h).real - math.exp(-(sigma * h) ** alpha)) <= 4 / math.sqrt(M)


@pytest.mark.parametrize("alpha", [0.4, 0.9, 1.5, 1.8])
def test_standard_cdf_against_cf_inversion(alpha):
    for z in (0.1, 0.8, 3.0, 15.0):
        assert standard_sas_cdf(np.array([z]), alpha)[0] == pytest.approx(gil_pelaez(z, alpha), abs=2e-9)
        assert standard_sas_cdf(np.array([-z]), alpha)[0] == pytest.approx(1 - gil_pelaez(z, alpha), abs=2e-9)


@pytest.mark.parametrize("alpha", [0.5, 1.2, 1.7])
def test_standard_cdf_is_continuous_and_monotone_across_the_series_switch(alpha):
    eps = 1e-9
    lo = standard_sas_cdf(np.array([20.0 - eps, -20.0 + eps]), alpha)
    hi = standard_sas_cdf(np.array([20.0 + eps, -20.0 - eps]), alpha)
    assert np.allclose(lo, hi, atol=1e-11, rtol=0)
    z = np.linspace(-200, 200, 4001)
    assert np.all(np.diff(standard_sas_cdf(z, alpha)) >= 0)
    far = standard_sas_cdf(np.array([1e4]), alpha)[0]
    # two leading terms of the tail expansion of P(S > z)
    z = 1e4
    lead = (math.gamma(alpha) * math.sin(math.pi * alpha / 2) * z ** -alpha
            - math.gamma(2 * alpha) / 2 * math.sin(math.pi * alpha) * z ** (-2 * alpha)) / math.pi
    assert 1 - far == pytest.approx(lead, rel=1e-3)


def test_stable_law_cdf_and_validation():
    law = StableLaw(1.0, 2.0)
    assert law.cdf(2.0) == pytest.approx(0.75, rel=1e-14)
    assert StableLaw(1.5, 0.0).cdf(np.array([-1e-9, 0.0])).tolist() == [0.0, 1.0]
    with pytest.raises(ValueError):
        StableLaw(2.0, 1.0)
    with pytest.raises(ValueError):
        StableLaw(1.0, -1.0)


def test_convolution_scale_examples():
    p = OUParams(1.0, 1.0, StableFamily(1.0))
    assert convolution_scale(p, 0.0) == 0.0
    assert convolution_scale(p, 1.0) == pytest.approx(math.pi * (1 - math.exp(-1)), rel=1e-12)
    assert convolution_scale(p, 60.0) == pytest.approx(invariant_scale(p), rel=1e-14)
    assert invariant_scale(OUParams(math.pi, 1.0, StableFamily(1.0))) == pytest.approx(1.0, rel=1e-12)
    a = StableFamily(1.3)
    assert invariant_scale(OUParams(2.0, 1.0, a)) < invariant_scale(OUParams(1.0, 1.0, a))
    assert invariant_scale(OUParams(100.0, 1.0, a)) < invariant_scale(OUParams(1.0, 1.0, a))
    with pytest.raises(TypeError):
        convolution_scale(OUParams(1.0, 1.0, CompoundPoissonSymmetric(((1.0, 1.0),))), 1.0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_invariant_scale_against_quadrature(alpha):
    # int_0^inf psi(e^{-gamma s} beta h) ds at h = 1 is sigma^alpha
    p = OUParams(0.8, 1.7, StableFamily(alpha))
    val = spi.quad(lambda s: psi(p.measure, p.beta * math.exp(-p.gamma * s)), 0, np.inf, epsrel=1e-11)[0]
    assert invariant_scale(p) ** alpha == pytest.approx(val, rel=1e-8)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_cf_convolution_matches_stable_closed_form(alpha):
    p = OUParams(1.3, 0.6, StableFamily(alpha))
    for h in (0.2, 1.0, 4.0):
        for t in (0.1, 1.0, 5.0):
            exact = math.exp(-(convolution_scale(p, t) * h) ** alpha)
            assert cf_convolution(p, h, t) == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize("m", [CompoundPoissonSymmetric(((1.0, 1.0),)), TemperedStable(0.9, 1.0), StableFamily(1.2)])
def test_cf_convolution_properties(m):
    p = OUParams(1.0, 1.0, m)
    assert cf_convolution(p, 0.0, 1.0) == 1.0
    vals = [cf_convolution(p, 1.5, t) for t in (0.25, 0.5, 1.0, 2.0)]
    assert all(0 < v <= 1 for v in vals)
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert cf_convolution(OUParams(1.0, 1.0, TableDensity.zero()), 1.0, 1.0) == 1.0


def test_exact_step_law_and_composition():
    M = 50_000
    p = OUParams(1.0, 1.0, StableFamily(1.5))
    rng = np.random.default_rng(3)
    y = ou_step_exact_stable(np.zeros(M), 1.0, p, rng)
    law = StableLaw(1.5, convolution_scale(p, 1.0))
    assert ks_distance(y, law.cdf) <= 1.63 / math.sqrt(M)
    two = ou_step_exact_stable(ou_step_exact_stable(np.zeros(M), 0.5, p, rng), 0.5, p, rng)
    for h in (0.5, 1.0, 2.0):
        assert abs(empirical_cf(two, h) - empirical_cf(y, h)) <= 8 / math.sqrt(M)


def test_exact_step_preserves_invariant_law():
    M = 50_000
    p = OUParams(2.0, 0.5, StableFamily(0.8))
    rng = np.random.default_rng(4)
    inv = StableLaw(0.8, invariant_scale(p))
    x = ou_step_exact_stable(inv.sample(rng, size=M), 0.3, p, rng)
    assert ks_distance(x, inv.cdf) <= 1.63 / math.sqrt(M)


def test_exact_step_zero_length_and_decay():
    p = OUParams(2.0, 1.0, StableFamily(1.1))
    rng = np.random.default_rng(5)
    x = np.array([1.0, -2.0])
    assert np.array_equal(ou_step_exact_stable(x, 0.0, p, rng), x)


def test_scale_covariance_two_sample():
    # Y_t equals (c_a (1 - e^{-a g t}) / (a g))^{1/a} beta S in law
    M = 40_000
    a = 1.3
    p = OUParams(0.7, 2.0, StableFamily(a))
    fails = 0
    # a 95% test: allow one rejection in three independent replicates
    for k in range(3):
        y = ou_step_exact_stable(np.zeros(M), 1.5, p, np.random.default_rng([6, k]))
        s = convolution_scale(p, 1.5) * sas_sample(a, 1.0, np.random.default_rng([7, k]), size=M)
        fails += stats.ks_2samp(y, s).statistic > 1.36 * math.sqrt(2 / M)
    assert fails <= 1


def test_general_step_exact_for_compound_poisson():
    M = 40_000
    m = CompoundPoissonSymmetric(((1.0, 0.5), (2.5, 0.3)))
    p = OUParams(1.0, 1.0, m)
    x = ou_step_general(np.zeros(M), 1.0, p, 0.5, np.random.default_rng(8))
    for h in (0.5, 1.0, 2.0):
        assert abs(empirical_cf(x, h).real - cf_convolution(p, h, 1.0)) <= 4 / math.sqrt(M)


def test_general_step_discrepancy_shrinks_with_eps():
    M = 100_000
    p = OUParams(1.0, 1.0, StableFamily(1.5))
    hs = (0.5, 1.0, 2.0)
    target = np.array([cf_convolution(p, h, 1.0) for h in hs])
    errs = []
    for eps in (0.5, 0.1, 0.02):
        x = ou_step_general(np.zeros(M), 1.0, p, eps, np.random.default_rng(9))
        emp = np.array([empirical_cf(x, h).real for h in hs])
        errs.append(np.max(np.abs(emp - target)))
    assert errs[0] > errs[1] > errs[2]


def test_gaussian_surrogate_reduces_bias():
    M = 100_000
    p = OUParams(1.0, 1.0, StableFamily(1.5))
    target = cf_convolution(p, 2.0, 1.0)
    drop = ou_step_general(np.zeros(M), 1.0, p, 0.3, np.random.default_rng(10))
    gauss = ou_step_general(np.zeros(M), 1.0, p, 0.3, np.random.default_rng(10), gaussian=True)
    assert abs(empirical_cf(gauss, 2.0).real - target) < abs(empirical_cf(drop, 2.0).real - target)
    assert small_jump_variance(p, 0.3, 1.0) == pytest.approx(4 * 0.3 ** 0.5 * (1 - math.exp(-2)) / 2, rel=1e-12)


def test_general_step_without_jumps_is_pure_decay():
    m = CompoundPoissonSymmetric(((1.0, 1.0),))
    p = OUParams(1.5, 1.0, m)
    x = np.full(4, 3.0)
    # eps above every atom: no jumps at all
    out = ou_step_general(x, 0.7, p, 2.0, np.random.default_rng(0))
    assert np.array_equal(out, math.exp(-1.5 * 0.7) * x)
    assert np.array_equal(ou_step_general(x, 0.0, p, 0.5, np.random.default_rng(0)), x)
    with pytest.raises(ValueError):
        ou_step_general(x, 1.0, p, 0.0, np.random.default_rng(0))
