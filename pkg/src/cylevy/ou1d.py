"""One-dimensional OU machinery driven by a symmetric Levy process.

A single mode solves ``dX = -gamma X dt + beta dZ``.  The mild solution is
``X_t = exp(-gamma t) x + Y_t`` with ``Y_t`` the stochastic convolution,
whose characteristic function is ``exp(-int_0^t psi(exp(-gamma s) beta h) ds)``.

Stable laws use the convention ``E exp(i h Y) = exp(-sigma^alpha |h|^alpha)``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator
from scipy.stats import levy_stable

from .levy_measure import StableFamily, SymmetricLevyMeasure, sample_jump_arrays, stable_constant
from .numerics import integrate

__all__ = [
    "StableLaw",
    "OUParams",
    "sas_sample",
    "convolution_scale",
    "invariant_scale",
    "cf_convolution",
    "ou_step_exact_stable",
    "ou_step_general",
    "standard_sas_cdf",
]

# beyond this |z| the standard SaS tail comes from its series, where the
# scipy integrator is no longer reliable
_Z_GRID = 20.0


@functools.lru_cache(maxsize=32)
def _cdf_grid(alpha: float) -> PchipInterpolator:
    u = np.linspace(0.0, math.asinh(_Z_GRID / 0.05), 1201)
    z = 0.05 * np.sinh(u)
    F = levy_stable.cdf(z, alpha, 0.0)
    F[0] = 0.5
    z = np.concatenate([-z[:0:-1], z])
    F = np.concatenate([1.0 - F[:0:-1], F])
    return PchipInterpolator(z, np.clip(F, 0.0, 1.0))


def _sas_sf_series(z, alpha):
    # P(S > z) = (1/pi) sum_k (-1)^(k+1) Gamma(alpha k)/k! sin(k pi alpha/2) z^(-alpha k)
    z = np.asarray(z, dtype=float)
    K = 60 if alpha < 1 else 12
    out = np.zeros_like(z)
    lz = np.log(z)
    for k in range(1, K + 1):
        c = (-1) ** (k + 1) * math.sin(k * math.pi * alpha / 2)
        if c == 0.0:
            continue
        logmag = special.gammaln(alpha * k) - special.gammaln(k + 1.0)
        out += c * np.exp(logmag - alpha * k * lz)
    return out / math.pi


def standard_sas_cdf(z, alpha: float):
    """CDF of the standard symmetric alpha-stable law (scale 1)."""
    z = np.asarray(z, dtype=float)
    if alpha == 1.0:
        return 0.5 + np.arctan(z) / math.pi
    out = np.empty_like(z)
    inner = np.abs(z) <= _Z_GRID
    out[inner] = _cdf_grid(float(alpha))(z[inner])
    outer = ~inner
    if np.any(outer):
        sf = _sas_sf_series(np.abs(z[outer]), alpha)
        out[outer] = np.where(z[outer] > 0, 1.0 - sf, sf)
    return out


@dataclass(frozen=True)
class StableLaw:
    """Symmetric alpha-stable law with ``E exp(ihY) = exp(-scale^alpha |h|^alpha)``."""

    alpha: float
    scale: float

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if not self.scale >= 0:
            raise ValueError("scale must be nonnegative")

    def cf(self, h):
        return np.exp(-(self.scale * np.abs(np.asarray(h, dtype=float))) ** self.alpha)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.scale == 0:
            return (x >= 0).astype(float)
        return standard_sas_cdf(x / self.scale, self.alpha)

    def sample(self, rng, size=None):
        return sas_sample(self.alpha, self.scale, rng, size)


@dataclass(frozen=True)
class OUParams:
    gamma: float
    beta: float
    measure: SymmetricLevyMeasure

    def __post_init__(self):
        if not (self.gamma > 0 and self.beta > 0):
            raise ValueError("gamma and beta must be positive")

    @property
    def alpha(self) -> float:
        if not isinstance(self.measure, StableFamily):
            raise TypeError("stable parameters required")
        return self.measure.alpha


def sas_sample(alpha: float, sigma: float, rng, size=None):
    """Chambers-Mallows-Stuck sampler for ``StableLaw(alpha, sigma)``."""
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    if not sigma >= 0:
        raise ValueError("sigma must be nonnegative")
    V = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size=size)
    W = rng.exponential(1.0, size=size)
    if alpha == 1.0:
        X = np.tan(V)
    else:
        X = (np.sin(alpha * V) / np.cos(V) ** (1.0 / alpha)
             * (np.cos((1.0 - alpha) * V) / W) ** ((1.0 - alpha) / alpha))
    if sigma == 0:
        return np.zeros_like(X) if size is not None else 0.0
    return sigma * X


def convolution_scale(params: OUParams, t: float) -> float:
    """Scale of ``Y_t`` for stable noise: ``c_a beta^a (1 - e^{-a gamma t}) / (a gamma)``."""
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    a = params.alpha
    s = stable_constant(a) * params.beta ** a * -math.expm1(-a * params.gamma * t) / (a * params.gamma)
    return s ** (1.0 / a)


def invariant_scale(params: OUParams) -> float:
    """Scale of the invariant law, ``(c_a beta^a / (a gamma))^(1/a)``."""
    a = params.alpha
    return (stable_constant(a) * params.beta ** a / (a * params.gamma)) ** (1.0 / a)


def cf_convolution(params: OUParams, h: float, t: float) -> float:
    """``exp(-int_0^t psi(exp(-gamma s) beta h) ds)`` by quadrature."""
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    if h == 0 or t == 0 or params.measure.is_zero():
        return 1.0
    m, g, bh = params.measure, params.gamma, params.beta * abs(h)
    f = lambda s: np.asarray(m.psi(bh * np.exp(-g * s)), dtype=float)  # noqa: E731
    val = integrate(f, 0.0, t, abs_tol=1e-14, rel_tol=1e-12, max_intervals=20000).value
    return math.exp(-val)


def ou_step_exact_stable(x, dt: float, params: OUParams, rng):
    """Advance by ``dt`` with the exact transition law (stable noise only)."""
    if not dt >= 0:
        raise ValueError("step must be nonnegative")
    x = np.asarray(x, dtype=float)
    sigma = convolution_scale(params, dt)
    noise = sas_sample(params.alpha, sigma, rng, size=x.shape)
    return math.exp(-params.gamma * dt) * x + noise


def small_jump_variance(params: OUParams, eps: float, dt: float) -> float:
    """``beta^2 psi0(eps) int_0^dt exp(-2 gamma s) ds``: mass of dropped jumps."""
    if params.measure.is_zero():
        return 0.0
    g = params.gamma
    return params.beta ** 2 * float(params.measure.psi0(eps)) * -math.expm1(-2.0 * g * dt) / (2.0 * g)


def ou_step_general(x, dt: float, params: OUParams, eps: float, rng, gaussian: bool = False):
    """Advance by ``dt`` keeping only jumps with ``|y| > eps``.

    Each jump at time ``tau`` enters discounted by ``exp(-gamma (dt - tau))``.
    Smaller jumps are dropped unless ``gaussian`` is set, in which case a
    centred normal with :func:`small_jump_variance` stands in for them.  That
    surrogate is an approximation: the model itself has no Gaussian part.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not dt >= 0:
        raise ValueError("step must be nonnegative")
    x = np.asarray(x, dtype=float)
    decay = math.exp(-params.gamma * dt)
    out = decay * x
    if dt == 0:
        return out
    flat = out.reshape(-1)
    counts, times, sizes = sample_jump_arrays(params.measure, eps, dt, rng, size=flat.size)
    if sizes.size:
        contrib = params.beta * sizes * np.exp(-params.gamma * (dt - times))
        owner = np.repeat(np.arange(flat.size), counts)
        flat = flat + np.bincount(owner, weights=contrib, minlength=flat.size)
    if gaussian:
        sd = math.sqrt(small_jump_variance(params, eps, dt))
        flat = flat + sd * rng.standard_normal(flat.size)
    return flat.reshape(x.shape)
