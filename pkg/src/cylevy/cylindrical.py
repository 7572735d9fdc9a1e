"""Truncated OU system ``X_t = e^{tA} x + Z_A(t)`` in ``N`` modes.

Coordinates are independent one-dimensional OU processes, so an ensemble
of ``M`` trajectories is an ``(M, N)`` array.  Ensembles are generated in
fixed-size blocks; block ``k`` draws from its own stream keyed by
``(seed, stream, k)``, which makes results independent of the number of
worker threads.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import optimize

from .levy_measure import StableFamily, SymmetricLevyMeasure, stable_constant, supports_zero
from .model import Spectrum
from .numerics import ks_distance, wilson_interval
from .ou1d import OUParams, StableLaw, ou_step_general, sas_sample, standard_sas_cdf

__all__ = [
    "OUModel",
    "TruncatedState",
    "EnsembleStats",
    "Ball",
    "IrreducibilityResult",
    "BLOCK_SIZE",
    "block_rng",
    "run_blocks",
    "simulate",
    "step",
    "ensemble",
    "h_norm_profile",
    "sample_invariant",
    "convergence_to_invariant",
    "analytic_ks",
    "scale_proxy",
    "irreducibility_estimate",
    "support_full_precheck",
]

BLOCK_SIZE = 1024

# stream identifiers keep different uses of one master seed apart
_STREAM_SIMULATE = 1
_STREAM_INVARIANT = 2
_STREAM_SPLIT = 3


@dataclass(frozen=True)
class OUModel:
    """Spectrum plus driving measure.

    ``eps`` and ``gaussian`` control the jump truncation used for
    non-stable measures; stable measures are always sampled exactly.
    """

    spectrum: Spectrum
    measure: SymmetricLevyMeasure
    eps: float = 1e-2
    gaussian: bool = False

    @property
    def is_stable(self) -> bool:
        return isinstance(self.measure, StableFamily)

    def rates(self, N: int):
        """``(gammas, betas)`` for the first ``N`` modes."""
        return self.spectrum.gammas(N), self.spectrum.betas(N)

    def mode(self, n: int) -> OUParams:
        g, b = self.rates(n)
        return OUParams(float(g[-1]), float(b[-1]), self.measure)

    def stable_scales(self, N: int, t: float) -> np.ndarray:
        """Per-mode scale of ``Y_t`` (``t = inf`` gives the invariant scales)."""
        a = self.measure.alpha
        g, b = self.rates(N)
        frac = np.ones_like(g) if math.isinf(t) else -np.expm1(-a * g * t)
        return (stable_constant(a) * b ** a * frac / (a * g)) ** (1.0 / a)


@dataclass
class TruncatedState:
    """State at time ``t``; ``coords`` has trailing axis of length ``N``."""

    t: float
    coords: np.ndarray
    model: OUModel

    @property
    def n_modes(self) -> int:
        return int(self.coords.shape[-1])


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def padded(self, N: int) -> np.ndarray:
        c = np.zeros(N)
        k = min(N, len(self.center))
        c[:k] = self.center[:k]
        if any(v != 0 for v in self.center[N:]):
            raise ValueError("ball center has mass beyond the truncation")
        return c


@dataclass
class EnsembleStats:
    seed: int
    M: int
    N_grid: tuple = ()
    time: float = math.nan
    quantiles: Optional[np.ndarray] = None  # (len(N_grid), 3): 25/50/75%
    times: tuple = ()
    ks: Optional[np.ndarray] = None  # (len(times), N)
    ks_analytic: Optional[np.ndarray] = None
    notes: List[str] = field(default_factory=list)

    def median(self, N: int) -> float:
        return float(self.quantiles[list(self.N_grid).index(N), 1])

    def rows(self):
        """Long-format rows ``(quantity, n_or_N, time, value)``."""
        out = []
        if self.quantiles is not None:
            for N, q in zip(self.N_grid, self.quantiles):
                for name, v in zip(("S_q25", "S_q50", "S_q75"), q):
                    out.append((name, int(N), self.time, float(v)))
        if self.ks is not None:
            for i, t in enumerate(self.times):
                for n in range(self.ks.shape[1]):
                    out.append(("ks", n + 1, float(t), float(self.ks[i, n])))
                    if self.ks_analytic is not None:
                        out.append(("ks_analytic", n + 1, float(t), float(self.ks_analytic[i, n])))
        return out


# -- seeding and blocks -------------------------------------------------------


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(block)))
    return np.random.default_rng(ss)


def run_blocks(fn: Callable[[int, np.random.Generator], np.ndarray], M: int, seed: int,
               stream: int, threads: int = 1) -> list:
    """Apply ``fn(size, rng)`` to each block and return results in block order."""
    if M < 1:
        raise ValueError("M must be positive")
    sizes = [min(BLOCK_SIZE, M - k) for k in range(0, M, BLOCK_SIZE)]
    job = lambda k: fn(sizes[k], block_rng(seed, stream, k))  # noqa: E731
    if threads <= 1 or len(sizes) == 1:
        return [job(k) for k in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, range(len(sizes))))


# -- simulation ---------------------------------------------------------------


def _pad(x0, N: int) -> np.ndarray:
    x = np.zeros(N)
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float).ravel()
        if x0.size > N:
            raise ValueError("initial datum has more modes than the truncation")
        x[:x0.size] = x0
    return x


def _advance(model: OUModel, coords: np.ndarray, h: float, rng) -> np.ndarray:
    # coords has shape (B, N); returns the state after time h with fresh noise
    N = coords.shape[1]
    g, b = model.rates(N)
    out = np.exp(-g * h) * coords
    if h == 0 or model.measure.is_zero():
        return out
    if model.is_stable:
        sig = model.stable_scales(N, h)
        return out + sig * sas_sample(model.measure.alpha, 1.0, rng, size=coords.shape)
    for n in range(N):
        p = OUParams(float(g[n]), float(b[n]), model.measure)
        out[:, n] = ou_step_general(coords[:, n], h, p, model.eps, rng, model.gaussian)
    return out


def simulate(model: OUModel, x0, t: float, N_modes: int, rng, size: Optional[int] = None) -> TruncatedState:
    """``X_t`` from ``x0`` (zero-padded to ``N_modes``); ``size`` trajectories if given."""
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    x = _pad(x0, N_modes)
    B = 1 if size is None else int(size)
    coords = _advance(model, np.broadcast_to(x, (B, N_modes)).copy(), t, rng)
    return TruncatedState(float(t), coords[0] if size is None else coords, model)


def step(state: TruncatedState, h: float, rng) -> TruncatedState:
    """Advance ``state`` by ``h`` using fresh, independent noise."""
    if not h >= 0:
        raise ValueError("h must be nonnegative")
    c = np.atleast_2d(state.coords)
    out = _advance(state.model, c.copy(), h, rng)
    return TruncatedState(state.t + h, out.reshape(state.coords.shape), state.model)


def ensemble(model: OUModel, x0, t: float, N_modes: int, M: int, seed: int,
             threads: int = 1) -> np.ndarray:
    """``(M, N_modes)`` array of independent copies of ``X_t``."""
    fn = lambda B, rng: simulate(model, x0, t, N_modes, rng, size=B).coords  # noqa: E731
    return np.concatenate(run_blocks(fn, M, seed, _STREAM_SIMULATE, threads))


def h_norm_profile(model: OUModel, x0, t: float, N_grid: Sequence[int], M: int, seed: int,
                   threads: int = 1) -> EnsembleStats:
    """Quantiles of ``S_N = sum_{n <= N} X_n^2`` at time ``t`` for each ``N`` in ``N_grid``."""
    N_grid = tuple(int(n) for n in N_grid)
    if any(b <= a for a, b in zip(N_grid, N_grid[1:])) or N_grid[0] < 1:
        raise ValueError("N_grid must be increasing and positive")
    if M < 100:
        raise ValueError("M must be at least 100")
    N = N_grid[-1]
    idx = np.array(N_grid) - 1

    def fn(B, rng):
        X = simulate(model, x0, t, N, rng, size=B).coords
        return np.cumsum(X * X, axis=1)[:, idx]

    S = np.concatenate(run_blocks(fn, M, seed, _STREAM_SIMULATE, threads))
    q = np.quantile(S, [0.25, 0.5, 0.75], axis=0).T
    return EnsembleStats(seed=seed, M=M, N_grid=N_grid, time=float(t), quantiles=q)


def _invariant_horizon(model: OUModel) -> float:
    # exp(-gamma_1 T) <= 1e-6
    return math.log(1e6) / float(model.spectrum.gammas(1)[0])


def sample_invariant(model: OUModel, N_modes: int, M: int, seed: int, threads: int = 1) -> np.ndarray:
    """``(M, N_modes)`` draws from the invariant law.

    Stable noise is sampled exactly.  Otherwise each mode is run from zero
    over the horizon ``T*`` with ``exp(-gamma_1 T*) = 1e-6``.
    """
    from .criteria import sufficient_check

    rep = sufficient_check(model.measure, model.spectrum, n_max=max(16, N_modes))
    if not rep.applies:
        warnings.warn("sufficient condition for an invariant law not verified", RuntimeWarning)
    if model.is_stable:
        sig = model.stable_scales(N_modes, math.inf)
        a = model.measure.alpha
        fn = lambda B, rng: sig * sas_sample(a, 1.0, rng, size=(B, N_modes))  # noqa: E731
    else:
        T = _invariant_horizon(model)
        fn = lambda B, rng: simulate(model, None, T, N_modes, rng, size=B).coords  # noqa: E731
    return np.concatenate(run_blocks(fn, M, seed, _STREAM_INVARIANT, threads))


def analytic_ks(alpha: float, scale_t: float, shift: float, scale_inf: float) -> float:
    """``sup_x |F_t(x) - F_inf(x)|`` for ``F_t`` = law of ``shift + S(scale_t)``."""
    Finf = lambda x: float(standard_sas_cdf(np.array([x / scale_inf]), alpha)[0])  # noqa: E731
    if scale_t == 0:
        F = Finf(shift)
        return max(F, 1.0 - F)
    Ft = lambda x: float(standard_sas_cdf(np.array([(x - shift) / scale_t]), alpha)[0])  # noqa: E731
    w = 20.0 * max(scale_t, scale_inf) + abs(shift)
    xs = np.linspace(-w, w, 4001)
    d = np.abs(standard_sas_cdf((xs - shift) / scale_t, alpha) - standard_sas_cdf(xs / scale_inf, alpha))
    i = int(np.argmax(d))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    res = optimize.minimize_scalar(lambda x: -abs(Ft(x) - Finf(x)), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-10 * w})
    return max(float(d[i]), -float(res.fun))


def convergence_to_invariant(model: OUModel, x0, times: Sequence[float], N_modes: int, M: int,
                             seed: int, threads: int = 1) -> EnsembleStats:
    """Per-time, per-coordinate KS distance of ``X_t`` to the invariant law.

    Only stable noise has a closed-form invariant law; for it the exact
    finite-time distance is reported as well (``ks_analytic``).
    """
    if not model.is_stable:
        raise TypeError("convergence_to_invariant needs stable noise")
    times = tuple(float(t) for t in times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be increasing")
    a = model.measure.alpha
    x = _pad(x0, N_modes)
    g, _ = model.rates(N_modes)
    inf_sig = model.stable_scales(N_modes, math.inf)
    ks = np.empty((len(times), N_modes))
    ana = np.empty_like(ks)
    for i, t in enumerate(times):
        X = ensemble(model, x, t, N_modes, M, seed + i, threads)
        sig = model.stable_scales(N_modes, t)
        for n in range(N_modes):
            law = StableLaw(a, float(inf_sig[n]))
            ks[i, n] = ks_distance(X[:, n], law.cdf)
            ana[i, n] = analytic_ks(a, float(sig[n]), math.exp(-g[n] * t) * x[n], float(inf_sig[n]))
    return EnsembleStats(seed=seed, M=M, times=times, ks=ks, ks_analytic=ana)


# -- irreducibility -----------------------------------------------------------


def support_full_precheck(measure: SymmetricLevyMeasure) -> bool:
    """Does the support of ``measure`` contain 0 (so every mode law has full support)?"""
    return supports_zero(measure)


def scale_proxy(model: OUModel, t: float, N_modes: int) -> np.ndarray:
    """Per-mode median absolute deviation of the stable law of ``Y_t``."""
    a = model.measure.alpha
    q75 = optimize.brentq(lambda z: float(standard_sas_cdf(np.array([z]), a)[0]) - 0.75, 1e-6, 50.0)
    return model.stable_scales(N_modes, t) * q75


@dataclass
class IrreducibilityResult:
    p_hat: float
    wilson_low: float
    wilson_high: float
    lower_bound: float
    K: int
    eps: float
    hits: int
    M: int
    applicable: bool
    label: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def rows(self):
        return [(k, 0, math.nan, float(v)) for k, v in (
            ("p_hat", self.p_hat), ("wilson_low", self.wilson_low),
            ("wilson_high", self.wilson_high), ("lower_bound", self.lower_bound),
            ("K", self.K), ("eps", self.eps), ("hits", self.hits))]


def irreducibility_estimate(model: OUModel, x0, ball: Ball, t: float, N_modes: int, M: int,
                            seed: int, threads: int = 1) -> IrreducibilityResult:
    """Estimate ``P(|X_t - center|_N < r)`` with a Wilson interval.

    ``lower_bound`` is the best product ``P(head < eps) P(tail < r^2 - eps)``
    over ``K in {1, 2, 4, 8}`` and ``eps in {1/4, 1/2, 3/4} r^2``, where the
    head is the first ``K`` squared offsets; the two factors come from
    independent ensembles.
    """
    c = ball.padded(N_modes)
    r2 = ball.radius ** 2
    applicable = support_full_precheck(model.measure)
    label = "theorem applies" if applicable else "theorem not applicable; estimate only"
    Ks = [K for K in (1, 2, 4, 8) if K <= N_modes]

    def sq(B, rng):
        X = simulate(model, x0, t, N_modes, rng, size=B).coords
        return np.cumsum((X - c) ** 2, axis=1)

    def summarize(B, rng):
        D = sq(B, rng)
        tot = D[:, -1]
        heads = np.stack([D[:, K - 1] for K in Ks], axis=1)
        return np.column_stack([tot, heads])

    A = np.concatenate(run_blocks(summarize, M, seed, _STREAM_SIMULATE, threads))
    Bv = np.concatenate(run_blocks(summarize, M, seed, _STREAM_SPLIT, threads))
    hits = int(np.count_nonzero(A[:, 0] < r2))
    lo, hi = wilson_interval(hits, M)
    best = (0.0, Ks[0], 0.25 * r2)
    for j, K in enumerate(Ks):
        head = A[:, 1 + j]
        tail = Bv[:, 0] - Bv[:, 1 + j]
        for f in (0.25, 0.5, 0.75):
            e = f * r2
            p = np.mean(head < e) * np.mean(tail < r2 - e)
            if p > best[0]:
                best = (float(p), K, float(e))
    return IrreducibilityResult(hits / M, lo, hi, best[0], best[1], best[2], hits, M,
                                applicable, label)
