import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as spi
from scipy.special import gamma as G

from cylevy.levy_measure import (
    CompoundPoissonSymmetric,
    InfiniteMassError,
    StableFamily,
    TableDensity,
    TemperedStable,
    image_measure,
    log_tail_moment,
    measure_from_record,
    psi,
    psi0,
    psi1,
    sample_jump_arrays,
    sample_jumps,
    stable_constant,
    supports_zero,
)

CP1 = CompoundPoissonSymmetric(((1.0, 1.0),))


def stable_table(alpha):
    # the stable density re-encoded as a black-box table
    return TableDensity(lambda y: np.asarray(y, dtype=float) ** (-1 - alpha),
                        zero_exponent=alpha, tail_exponent=alpha, breakpoints_=(1.0,))


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0, 1.5, 1.9])
def test_stable_constant_matches_gamma_formula(alpha):
    exact = math.pi / (G(1 + alpha) * math.sin(math.pi * alpha / 2))
    assert stable_constant(alpha) == pytest.approx(exact, rel=1e-12)


def test_psi_examples():
    for m in (CP1, StableFamily(1.2), TemperedStable(0.7, 2.0)):
        assert psi(m, 0.0) == 0.0
    assert psi(CP1, math.pi) == pytest.approx(4.0, rel=1e-15)
    assert psi(StableFamily(1.0), 1.0) == pytest.approx(math.pi, rel=1e-12)


def test_psi0_psi1_examples():
    m = StableFamily(1.5)
    assert psi0(m, 1.0) == pytest.approx(4.0, rel=1e-15)
    assert psi1(m, 1.0) == pytest.approx(4 / 3, rel=1e-15)
    assert psi0(CP1, 0.5) == 0.0 and psi1(CP1, 0.5) == 2.0
    for mm in (m, CP1, TemperedStable(1.1, 1.0)):
        assert psi0(mm, 0.0) == 0.0
    with pytest.raises(InfiniteMassError):
        psi1(m, 0.0)
    assert psi1(CP1, 0.0) == 2.0


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_table_encoding_matches_stable_closed_forms(alpha):
    m, t = StableFamily(alpha), stable_table(alpha)
    for u in (0.3, 1.0, 4.0):
        assert psi0(t, u) == pytest.approx(psi0(m, u), rel=1e-8)
        assert psi1(t, u) == pytest.approx(psi1(m, u), rel=1e-8)
    for h in (0.5, 1.0, 3.0):
        assert psi(t, h) == pytest.approx(psi(m, h), rel=1e-8)


@pytest.mark.parametrize("alpha, lam", [(0.5, 1.0), (1.0, 2.0), (1.5, 0.5)])
def test_tempered_closed_forms_against_scipy_quadrature(alpha, lam):
    m = TemperedStable(alpha, lam)
    p = lambda y: math.exp(-lam * y) * y ** (-1 - alpha)  # noqa: E731
    for u in (0.5, 2.0):
        q0 = 2 * spi.quad(lambda y: y * y * p(y), 0, u, epsabs=1e-14, epsrel=1e-12)[0]
        q1 = 2 * spi.quad(p, u, np.inf, epsabs=1e-14, epsrel=1e-12)[0]
        assert psi0(m, u) == pytest.approx(q0, rel=1e-9)
        assert psi1(m, u) == pytest.approx(q1, rel=1e-9)
    for h in (0.5, 3.0):
        f = lambda y: 2 * math.sin(h * y / 2) ** 2 * p(y)  # noqa: E731
        far = (spi.quad(p, 1, np.inf, epsabs=1e-14)[0]
               - spi.quad(p, 1, np.inf, weight="cos", wvar=h)[0])
        # y = v^2 removes the integrable singularity at 0
        near = spi.quad(lambda v: f(v * v) * 2 * v if v > 0 else 0.0, 0, 1, epsabs=1e-14, limit=200)[0]
        q = 2 * (near + far)
        assert psi(m, h) == pytest.approx(q, rel=1e-7)


def test_tempered_tends_to_stable_as_lambda_vanishes():
    a = 1.3
    assert psi(TemperedStable(a, 1e-9), 2.0) == pytest.approx(psi(StableFamily(a), 2.0), rel=1e-6)


def test_log_tail_moment_examples():
    assert log_tail_moment(CP1) == 0.0
    assert log_tail_moment(StableFamily(1.0)) == pytest.approx(1.0)
    assert log_tail_moment(StableFamily(1.5)) == pytest.approx(1 / 2.25)
    # density y^-1 (log y)^-3/2 beyond e: log moment diverges
    heavy = TableDensity(lambda y: np.where(y > math.e, 1 / (y * np.log(np.maximum(y, math.e)) ** 1.5), 0.0),
                         support_=(math.e, math.inf), tail_exponent=0.0, tail_log_power=1.5)
    assert log_tail_moment(heavy) == math.inf
    assert log_tail_moment(stable_table(1.5)) == pytest.approx(1 / 2.25, rel=1e-8)


def test_supports_zero():
    assert supports_zero(StableFamily(0.4))
    assert not supports_zero(CP1)
    gap = TableDensity(lambda y: np.ones_like(np.asarray(y, dtype=float)), support_=(0.1, 1.0))
    assert not supports_zero(gap)
    positive = TableDensity(lambda y: np.ones_like(np.asarray(y, dtype=float)),
                            support_=(0.0, 1.0), zero_exponent=-1.0)
    assert supports_zero(positive)


def test_table_rejects_undeclared_singularities():
    with pytest.raises(ValueError):
        TableDensity(lambda y: 1 / np.asarray(y) ** 2, support_=(0.0, 1.0))
    with pytest.raises(ValueError):
        TableDensity(lambda y: 1 / np.asarray(y) ** 2, support_=(1.0, math.inf))


@given(st.floats(0.05, 20.0))
@settings(max_examples=30, deadline=None)
def test_psi_bounded_by_truncated_second_moment(h):
    for m in (StableFamily(1.5), TemperedStable(0.8, 1.0), CompoundPoissonSymmetric(((0.5, 1.0), (3.0, 0.2)))):
        # 1 - cos x <= min(2, x^2 / 2) <= 2 min(1, x^2)
        bound = 2 * (h * h * psi0(m, 1 / h) + psi1(m, 1 / h))
        assert 0.0 <= psi(m, h) <= bound * (1 + 1e-10)
        assert psi(m, -h) == pytest.approx(psi(m, h), rel=1e-12)


@pytest.mark.parametrize("m", [StableFamily(1.5), TemperedStable(0.8, 1.0),
                               CompoundPoissonSymmetric(((0.5, 1.0), (3.0, 0.2)))])
def test_monotonicity_of_psi0_psi1(m):
    u = np.geomspace(0.01, 100, 40)
    p0 = np.array([psi0(m, x) for x in u])
    p1 = np.array([psi1(m, x) for x in u])
    assert np.all(np.diff(p0) >= 0) and np.all(np.diff(p1) <= 0)


@pytest.mark.parametrize("m", [StableFamily(1.2), TemperedStable(0.9, 1.5),
                               CompoundPoissonSymmetric(((0.5, 1.0), (3.0, 0.2)))])
@pytest.mark.parametrize("beta", [0.3, 2.5])
def test_image_measure_scaling(m, beta):
    im = image_measure(m, beta)
    for u in (0.4, 2.0):
        assert psi0(im, u) == pytest.approx(beta ** 2 * psi0(m, u / beta), rel=1e-8)
        assert psi1(im, u) == pytest.approx(psi1(m, u / beta), rel=1e-8)
    assert psi(im, 1.3) == pytest.approx(psi(m, 1.3 * beta), rel=1e-8)


def test_sample_jumps_above_all_atoms_is_empty():
    assert sample_jumps(CP1, 2.0, 5.0, np.random.default_rng(0)) == []


def test_stable_jump_count_and_sign_balance():
    rng = np.random.default_rng(11)
    M = 100_000
    counts, times, sizes = sample_jump_arrays(StableFamily(1.5), 1.0, 1.0, rng, size=M)
    se = math.sqrt(4 / 3 / M)
    assert abs(counts.mean() - 4 / 3) <= 4 * se
    assert np.all(np.abs(sizes) > 1.0)
    assert np.all((times >= 0) & (times <= 1))
    assert abs(np.mean(np.sign(sizes))) <= 4 / math.sqrt(sizes.size)


def test_stable_jump_sizes_follow_pareto():
    rng = np.random.default_rng(3)
    _, _, sizes = sample_jump_arrays(StableFamily(0.8), 0.5, 50.0, rng, size=200)
    y = np.abs(sizes)
    # P(|Y| > y) = (y / eps)^-alpha
    for q in (1.0, 3.0):
        assert np.mean(y > q) == pytest.approx((q / 0.5) ** -0.8, abs=4 / math.sqrt(y.size))


def test_table_rejection_sampler_matches_measure():
    t = TableDensity.from_knots([(0.2, 2.0), (1.0, 1.0), (3.0, 0.1)], zero_exponent=0.5, tail_exponent=1.5)
    rng = np.random.default_rng(5)
    _, _, sizes = sample_jump_arrays(t, 0.1, 200.0, rng, size=100)
    y = np.abs(sizes)
    for q in (0.5, 2.0):
        expected = psi1(t, q) / psi1(t, 0.1)
        assert np.mean(y > q) == pytest.approx(expected, abs=4 / math.sqrt(y.size))


def test_sample_jumps_sorted_records():
    recs = sample_jumps(StableFamily(1.0), 0.1, 2.0, np.random.default_rng(2))
    ts = [r.time for r in recs]
    assert ts == sorted(ts) and all(abs(r.size) > 0.1 for r in recs)


def test_measure_from_record():
    assert isinstance(measure_from_record({"type": "stable", "alpha": 1.5}), StableFamily)
    assert isinstance(measure_from_record({"type": "tempered", "alpha": 0.8, "lambda": 2.0}), TemperedStable)
    assert measure_from_record({"type": "cp", "atoms": [[1.0, 1.0]]}) == CP1
    assert measure_from_record({"type": "table", "zero": True}).is_zero()
    with pytest.raises(ValueError):
        measure_from_record({"type": "gaussian"})
