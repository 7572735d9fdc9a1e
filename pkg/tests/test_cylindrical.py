import math
import warnings

import numpy as np
import pytest
from scipy import stats

from cylevy.cylindrical import (
    BLOCK_SIZE,
    Ball,
    OUModel,
    analytic_ks,
    block_rng,
    convergence_to_invariant,
    ensemble,
    h_norm_profile,
    irreducibility_estimate,
    run_blocks,
    sample_invariant,
    scale_proxy,
    simulate,
    step,
    support_full_precheck,
)
from cylevy.levy_measure import CompoundPoissonSymmetric, StableFamily, TableDensity, TemperedStable
from cylevy.model import Spectrum
from cylevy.numerics import empirical_cf, ks_distance
from cylevy.ou1d import StableLaw

HEAT = OUModel(Spectrum.laplacian(1), StableFamily(1.5))
QUIET = OUModel(Spectrum.laplacian(1), TableDensity.zero())
CP1 = CompoundPoissonSymmetric(((1.0, 1.0),))


def test_zero_start_zero_time_is_zero():
    s = simulate(HEAT, [], 0.0, 5, np.random.default_rng(0))
    assert s.t == 0.0 and np.all(s.coords == 0.0) and s.n_modes == 5


def test_step_zero_and_noiseless_decay():
    rng = np.random.default_rng(1)
    s = simulate(HEAT, [1.0, 2.0], 0.3, 4, rng)
    same = step(s, 0.0, rng)
    assert np.array_equal(same.coords, s.coords) and same.t == s.t
    q = simulate(QUIET, [1.0, 2.0, 3.0], 0.5, 3, rng)
    assert np.allclose(q.coords, np.exp(-0.5 * np.array([1.0, 4.0, 9.0])) * [1, 2, 3], rtol=1e-15)
    q2 = step(q, 0.25, rng)
    assert np.allclose(q2.coords, np.exp(-0.75 * np.array([1.0, 4.0, 9.0])) * [1, 2, 3], rtol=1e-14)
    with pytest.raises(ValueError):
        simulate(HEAT, [1.0, 2.0, 3.0], 1.0, 2, rng)


def test_stable_coordinates_follow_exact_law():
    M = 20_000
    X = ensemble(HEAT, [0.5], 1.0, 3, M, seed=3)
    scales = HEAT.stable_scales(3, 1.0)
    shift = [math.exp(-1.0) * 0.5, 0.0, 0.0]
    for n in range(3):
        law = StableLaw(1.5, float(scales[n]))
        assert ks_distance(X[:, n] - shift[n], law.cdf) <= 1.63 / math.sqrt(M)


@pytest.mark.parametrize("model", [HEAT, OUModel(Spectrum.laplacian(1), CompoundPoissonSymmetric(((0.7, 1.0),)))])
def test_markov_composition(model):
    M = 20_000
    rng = np.random.default_rng(4)
    one = simulate(model, [1.0], 1.0, 3, rng, size=M).coords
    two = step(simulate(model, [1.0], 0.4, 3, rng, size=M), 0.6, rng).coords
    for n in range(3):
        for h in (0.5, 1.0, 2.0):
            assert abs(empirical_cf(one[:, n], h) - empirical_cf(two[:, n], h)) <= 8 / math.sqrt(M)


def test_coordinates_are_independent():
    # heavy tails make Pearson correlation meaningless; use ranks
    M = 20_000
    X = ensemble(OUModel(Spectrum.power_law(1.0, 1.0, 1.0, 0.0), StableFamily(0.9)), [], 1.0, 4, M, seed=5)
    rho = stats.spearmanr(X).statistic
    off = rho[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off)) <= 4 / math.sqrt(M)


def test_ensembles_are_deterministic_across_threads():
    M = 3 * BLOCK_SIZE + 17
    a = ensemble(HEAT, [1.0], 0.5, 6, M, seed=7, threads=1)
    b = ensemble(HEAT, [1.0], 0.5, 6, M, seed=7, threads=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, ensemble(HEAT, [1.0], 0.5, 6, M, seed=8))
    m = OUModel(Spectrum.laplacian(1), TemperedStable(0.8, 1.0), eps=0.05)
    s1 = h_norm_profile(m, [], 1.0, [2, 4], 300, seed=2, threads=1)
    s2 = h_norm_profile(m, [], 1.0, [2, 4], 300, seed=2, threads=3)
    assert np.array_equal(s1.quantiles, s2.quantiles) and s1.rows() == s2.rows()


def test_block_streams_are_distinct():
    a = block_rng(1, 1, 0).random(4)
    assert not np.array_equal(a, block_rng(1, 1, 1).random(4))
    assert not np.array_equal(a, block_rng(1, 2, 0).random(4))
    assert np.array_equal(a, block_rng(1, 1, 0).random(4))
    sizes = run_blocks(lambda B, rng: B, 2 * BLOCK_SIZE + 1, 0, 1)
    assert sizes == [BLOCK_SIZE, BLOCK_SIZE, 1]
    with pytest.raises(ValueError):
        run_blocks(lambda B, rng: B, 0, 0, 1)


def test_h_norm_profile_zero_noise_is_deterministic():
    x0 = [1.0, -1.0, 2.0]
    st = h_norm_profile(QUIET, x0, 0.5, [1, 2, 3, 8], 100, seed=0)
    g = np.array([1.0, 4.0, 9.0])
    S = np.cumsum(np.exp(-2 * g * 0.5) * np.array(x0) ** 2)
    expect = [S[0], S[1], S[2], S[2]]
    assert np.allclose(st.quantiles, np.repeat(np.array(expect)[:, None], 3, axis=1), rtol=1e-14)
    assert np.all(st.quantiles[:, 1] <= sum(v * v for v in x0))
    with pytest.raises(ValueError):
        h_norm_profile(QUIET, x0, 0.5, [4, 2], 100, seed=0)
    with pytest.raises(ValueError):
        h_norm_profile(QUIET, x0, 0.5, [2, 4], 99, seed=0)


def test_h_norm_quantiles_monotone_in_N():
    st = h_norm_profile(HEAT, [], 1.0, [1, 4, 16, 64], 500, seed=1)
    assert np.all(np.diff(st.quantiles, axis=0) >= 0)
    rows = st.rows()
    assert rows[0][0] == "S_q25" and len(rows) == 12


def test_sample_invariant_stable_law_and_warning():
    M = 20_000
    X = sample_invariant(HEAT, 3, M, seed=2)
    inf = HEAT.stable_scales(3, math.inf)
    for n in range(3):
        assert ks_distance(X[:, n], StableLaw(1.5, float(inf[n])).cdf) <= 1.63 / math.sqrt(M)
    with pytest.warns(RuntimeWarning):
        sample_invariant(OUModel(Spectrum.laplacian(2), StableFamily(1.5)), 2, 100, seed=0)


def test_sample_invariant_general_noise_matches_stationary_cf():
    from cylevy.ou1d import cf_convolution
    M = 20_000
    m = OUModel(Spectrum.laplacian(1), CompoundPoissonSymmetric(((0.5, 2.0),)), eps=0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        X = sample_invariant(m, 2, M, seed=3)
    for n in range(2):
        p = m.mode(n + 1)
        for h in (0.5, 2.0):
            assert abs(empirical_cf(X[:, n], h).real - cf_convolution(p, h, 60.0)) <= 4 / math.sqrt(M)


def test_convergence_to_invariant_examples():
    M = 4000
    st = convergence_to_invariant(HEAT, [], [0.0, 5.0], 2, M, seed=4)
    assert np.all(st.ks[0] == 0.5) and np.allclose(st.ks_analytic[0], 0.5, atol=1e-12)
    assert np.all(st.ks_analytic[1] <= 0.01)
    assert np.all(st.ks[1] <= st.ks_analytic[1] + 1.63 / math.sqrt(M))
    with pytest.raises(TypeError):
        convergence_to_invariant(OUModel(Spectrum.laplacian(1), CP1), [], [1.0], 1, 100, seed=0)
    with pytest.raises(ValueError):
        convergence_to_invariant(HEAT, [], [2.0, 1.0], 1, 100, seed=0)


def test_analytic_ks_nonincreasing_on_doubling_grid():
    a, g = 1.5, float(HEAT.mode(1).gamma)
    inf = HEAT.stable_scales(1, math.inf)[0]
    vals = []
    for t in (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
        sig = (1 - math.exp(-a * g * t)) ** (1 / a) * inf
        vals.append(analytic_ks(a, sig, math.exp(-g * t) * 2.0, inf))
    assert all(x >= y for x, y in zip(vals, vals[1:]))
    assert analytic_ks(a, inf, 0.0, inf) == pytest.approx(0.0, abs=1e-12)


def test_support_precheck_examples():
    assert support_full_precheck(StableFamily(1.2))
    assert not support_full_precheck(CP1)
    assert support_full_precheck(TableDensity(lambda y: np.ones_like(np.asarray(y, dtype=float)),
                                              support_=(0.0, 1.0), zero_exponent=-1.0))


def test_irreducibility_zero_noise_misses_the_ball():
    r = irreducibility_estimate(QUIET, [1.0], Ball((5.0,), 0.5), 1.0, 4, 500, seed=0)
    assert r.p_hat == 0.0 and r.hits == 0 and r.wilson_low == 0.0 and r.lower_bound == 0.0


def test_irreducibility_wide_ball_is_hit():
    t, N = 1.0, 8
    x0 = [1.0, 0.5]
    center = tuple(np.exp(-HEAT.spectrum.gammas(N) * t)[:2] * x0)
    r = 10 * float(np.sum(scale_proxy(HEAT, t, N)))
    res = irreducibility_estimate(HEAT, x0, Ball(center, r), t, N, 5000, seed=1)
    assert res.p_hat >= 0.9 and res.applicable and res.label == "theorem applies"
    assert res.lower_bound <= res.wilson_high


def test_irreducibility_offset_ball_and_labels():
    N = 16
    c = 3 * float(HEAT.stable_scales(1, math.inf)[0])
    res = irreducibility_estimate(HEAT, [], Ball((c,), c / 2), 1.0, N, 20_000, seed=2)
    assert res.wilson_low > 0 and 0 < res.lower_bound <= res.wilson_high
    assert res.K in (1, 2, 4, 8) and res.eps in {f * (c / 2) ** 2 for f in (0.25, 0.5, 0.75)}
    cp = irreducibility_estimate(OUModel(Spectrum.laplacian(1), CP1), [], Ball((0.0,), 1.0), 1.0, 4, 200, seed=0)
    assert not cp.applicable and cp.label == "theorem not applicable; estimate only"
    assert {r[0] for r in cp.rows()} >= {"p_hat", "wilson_low", "lower_bound"}


def test_ball_validation():
    with pytest.raises(ValueError):
        Ball((0.0,), 0.0)
    with pytest.raises(ValueError):
        Ball((0.0, 0.0, 1.0), 1.0).padded(2)
    assert Ball((1.0,), 1.0).padded(3).tolist() == [1.0, 0.0, 0.0]
