"""Symmetric one-dimensional Lévy measures.

A measure is stored through its restriction to ``(0, inf)``; the negative
half is its mirror image, so every representable measure is symmetric.  The
functionals used by the membership criteria are

* ``psi(h)  = int (1 - cos(h y)) nu(dy)``       (characteristic exponent)
* ``psi0(u) = int_{|y| <= u} y**2 nu(dy)``      (truncated second moment)
* ``psi1(u) = int_{|y| > u} nu(dy)``            (tail mass)

all taken over the full (two-sided) measure.  ``log_tail_moment`` is the
one-sided ``int_{(1, inf)} log(y) nu(dy)``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .numerics import QuadratureError, integrate, integrate_cos_tail

__all__ = [
    "SymmetricLevyMeasure",
    "StableFamily",
    "TemperedStable",
    "CompoundPoissonSymmetric",
    "TableDensity",
    "JumpRecord",
    "InfiniteMassError",
    "stable_constant",
    "psi",
    "psi0",
    "psi1",
    "log_tail_moment",
    "supports_zero",
    "sample_jumps",
    "image_measure",
    "measure_from_record",
]

_QTOL = 1e-12


class InfiniteMassError(ValueError):
    """``psi1(0)`` requested for a measure of infinite total mass."""


@dataclass(frozen=True)
class JumpRecord:
    time: float
    size: float


def _sin2_half(hy):
    # 1 - cos(x) without cancellation
    s = np.sin(0.5 * hy)
    return 2.0 * s * s


@functools.lru_cache(maxsize=64)
def stable_constant(alpha: float) -> float:
    """``c_alpha = int_R (1 - cos y) |y|**(-1-alpha) dy`` by quadrature.

    The head ``(0, 1)`` uses the cosine power series, ``(1, Y)`` adaptive
    quadrature and the oscillatory tail an accelerated alternating sum.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    head = []
    for k in range(1, 30):
        head.append((-1) ** (k + 1) / (math.factorial(2 * k) * (2 * k - alpha)))
    head = math.fsum(head)
    Y = 16.5 * math.pi
    mid = integrate(lambda y: _sin2_half(y) * y ** (-1.0 - alpha), 1.0, Y,
                    abs_tol=1e-14, rel_tol=5e-13, max_intervals=20000).value
    tail = Y ** (-alpha) / alpha - integrate_cos_tail(
        lambda y: y ** (-1.0 - alpha), Y, 1.0, abs_tol=1e-15)
    return 2.0 * (head + mid + tail)


class SymmetricLevyMeasure:
    """Base class; subclasses describe the restriction of nu to ``(0, inf)``."""

    # positive support [lo, hi]; hi may be inf
    def support(self) -> Tuple[float, float]:
        return (0.0, math.inf)

    def breakpoints(self) -> Tuple[float, ...]:
        return ()

    def density(self, y):
        raise NotImplementedError

    # one-sided integral of g against nu over (a, b]
    def integral(self, g: Callable, a: float, b: float) -> float:
        lo, hi = self.support()
        a, b = max(a, lo), min(b, hi)
        if not a < b:
            return 0.0
        pts = [p for p in self.breakpoints() if a < p < b]
        res = integrate(lambda y: g(y) * self.density(y), a, b,
                        abs_tol=1e-300, rel_tol=_QTOL, points=pts, max_intervals=20000)
        return res.value

    def infinite_activity(self) -> bool:
        return True

    def psi(self, h):
        h = np.abs(np.asarray(h, dtype=float))
        out = np.array([self._psi_quad(v) for v in h.ravel()]).reshape(h.shape)
        return out if out.ndim else float(out)

    def _psi_quad(self, h: float) -> float:
        if h == 0.0:
            return 0.0
        lo, hi = self.support()
        if not lo < hi:
            return 0.0
        f = lambda y: _sin2_half(h * y) * self.density(y)  # noqa: E731
        if math.isfinite(hi):
            return 2.0 * self.integral(lambda y: _sin2_half(h * y), lo, hi)
        bps = [p for p in self.breakpoints() if p > lo]
        Y = max([lo, *bps]) + 16.5 * math.pi / h
        head = integrate(f, lo, Y, abs_tol=1e-300, rel_tol=_QTOL,
                         points=bps, max_intervals=20000).value
        mass = self.integral(lambda y: np.ones_like(y), Y, math.inf)
        osc = integrate_cos_tail(self.density, Y, h, abs_tol=1e-14 * max(mass, 1e-300))
        return 2.0 * (head + mass - osc)

    def psi0(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be nonnegative")
        out = np.array([2.0 * self.integral(lambda y: y * y, 0.0, v) if v > 0 else 0.0
                        for v in u.ravel()]).reshape(u.shape)
        return out if out.ndim else float(out)

    def psi1(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be nonnegative")
        if np.any(u == 0) and self.infinite_activity():
            raise InfiniteMassError("psi1(0) is infinite for an infinite-activity measure")
        out = np.array([2.0 * self.integral(np.ones_like, v, math.inf)
                        for v in u.ravel()]).reshape(u.shape)
        return out if out.ndim else float(out)

    def mass(self, a: float, b: float) -> float:
        """One-sided ``nu((a, b])``."""
        return self.integral(np.ones_like, a, b)

    def second_moment(self, a: float, b: float) -> float:
        """One-sided ``int_{(a, b]} y**2 nu(dy)``."""
        return self.integral(lambda y: y * y, a, b)

    def log_moment(self, a: float, b: float) -> float:
        """One-sided ``int_{(a, b]} log(y) nu(dy)`` for ``a >= 1``."""
        return self.integral(np.log, a, b)

    def log_tail_moment(self) -> float:
        return self.log_moment(1.0, math.inf)

    def supports_zero(self) -> bool:
        raise NotImplementedError

    def _sample_sizes(self, eps: float, n: int, rng) -> np.ndarray:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False


@dataclass(frozen=True)
class StableFamily(SymmetricLevyMeasure):
    """``nu(dy) = |y|**(-1-alpha) dy``."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")

    def density(self, y):
        return np.asarray(y, dtype=float) ** (-1.0 - self.alpha)

    @property
    def c_alpha(self) -> float:
        return stable_constant(self.alpha)

    def psi(self, h):
        h = np.asarray(h, dtype=float)
        out = self.c_alpha * np.abs(h) ** self.alpha
        return out if out.ndim else float(out)

    def psi0(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be nonnegative")
        a = self.alpha
        out = 2.0 / (2.0 - a) * u ** (2.0 - a)
        return out if out.ndim else float(out)

    def psi1(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be nonnegative")
        if np.any(u == 0):
            raise InfiniteMassError("psi1(0) is infinite for a stable measure")
        out = 2.0 / self.alpha * u ** (-self.alpha)
        return out if out.ndim else float(out)

    def mass(self, a, b):
        a = max(a, 0.0)
        if not a < b:
            return 0.0
        if a == 0.0:
            return math.inf
        hi = 0.0 if math.isinf(b) else b ** (-self.alpha)
        return (a ** (-self.alpha) - hi) / self.alpha

    def second_moment(self, a, b):
        a = max(a, 0.0)
        if not a < b:
            return 0.0
        if math.isinf(b):
            return math.inf
        e = 2.0 - self.alpha
        return (b ** e - a ** e) / e

    def log_moment(self, a, b):
        al = self.alpha

        def anti(y):
            if math.isinf(y):
                return 0.0
            return -y ** (-al) * (math.log(y) / al + 1.0 / al ** 2)

        a = max(a, 1.0)
        if not a < b:
            return 0.0
        return anti(b) - anti(a)

    def log_tail_moment(self):
        return 1.0 / self.alpha ** 2

    def supports_zero(self):
        return True

    def _sample_sizes(self, eps, n, rng):
        # inverse of the normalised tail (y / eps)**(-alpha)
        return eps * rng.uniform(size=n) ** (-1.0 / self.alpha)


@dataclass(frozen=True)
class TemperedStable(SymmetricLevyMeasure):
    """``nu(dy) = exp(-lam |y|) |y|**(-1-alpha) dy``."""

    alpha: float
    lam: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return np.exp(-self.lam * y) * y ** (-1.0 - self.alpha)

    def psi(self, h):
        h = np.abs(np.asarray(h, dtype=float))
        a, lam = self.alpha, self.lam
        if a == 1.0:
            out = 2.0 * (h * np.arctan(h / lam) - 0.5 * lam * np.log1p((h / lam) ** 2))
        else:
            r = np.hypot(lam, h)
            theta = np.arctan2(h, lam)
            out = 2.0 * special.gamma(-a) * (lam ** a - r ** a * np.cos(a * theta))
        out = np.where(h == 0, 0.0, out)
        return out if out.ndim else float(out)

    def psi0(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be nonnegative")
        a, lam = self.alpha, self.lam
        out = 2.0 * lam ** (a - 2.0) * special.gamma(2.0 - a) * special.gammainc(2.0 - a, lam * u)
        return out if out.ndim else float(out)

    def _upper_gamma_neg(self, x):
        # Gamma(-alpha, x) via the recurrence Gamma(s, x) = (Gamma(s+1, x) - x**s e**-x) / s
        a = self.alpha
        x = np.asarray(x, dtype=float)

        def upper(s, x):
            if s > 0:
                return special.gammaincc(s, x) * special.gamma(s)
            if s == 0:
                return special.exp1(x)
            return (upper(s + 1.0, x) - x ** s * np.exp(-x)) / s

        return upper(-a, x)

    def psi1(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be nonnegative")
        if np.any(u == 0):
            raise InfiniteMassError("psi1(0) is infinite for a tempered stable measure")
        out = 2.0 * self.lam ** self.alpha * self._upper_gamma_neg(self.lam * u)
        return out if out.ndim else float(out)

    def supports_zero(self):
        return True

    def _sample_sizes(self, eps, n, rng):
        # rejection from the Pareto tail of the untempered measure
        out = np.empty(0)
        need = n
        while need > 0:
            m = max(2 * need, 16)
            y = eps * rng.uniform(size=m) ** (-1.0 / self.alpha)
            keep = y[rng.uniform(size=m) < np.exp(-self.lam * (y - eps))]
            out = np.concatenate([out, keep[:need]])
            need = n - out.size
        return out


@dataclass(frozen=True)
class CompoundPoissonSymmetric(SymmetricLevyMeasure):
    """Atoms ``m_k`` at ``+-y_k``; ``atoms`` is a sequence of ``(y_k, m_k)``."""

    atoms: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple(sorted((float(y), float(m)) for y, m in self.atoms))
        for y, m in atoms:
            if not (y > 0 and m > 0 and math.isfinite(y) and math.isfinite(m)):
                raise ValueError("atoms need positive finite location and mass")
        object.__setattr__(self, "atoms", atoms)

    @property
    def _locs(self):
        return np.array([y for y, _ in self.atoms])

    @property
    def _masses(self):
        return np.array([m for _, m in self.atoms])

    def support(self):
        if not self.atoms:
            return (0.0, 0.0)
        return (self.atoms[0][0], self.atoms[-1][0])

    def infinite_activity(self):
        return False

    def is_zero(self):
        return not self.atoms

    def integral(self, g, a, b):
        if not self.atoms:
            return 0.0
        y, m = self._locs, self._masses
        sel = (y > a) & (y <= b)
        if not np.any(sel):
            return 0.0
        return math.fsum(np.asarray(g(y[sel]), dtype=float) * m[sel])

    def psi(self, h):
        h = np.asarray(h, dtype=float)
        if not self.atoms:
            out = np.zeros_like(h)
        else:
            out = 2.0 * np.sum(self._masses * _sin2_half(h[..., None] * self._locs), axis=-1)
        return out if out.ndim else float(out)

    def psi0(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be nonnegative")
        if not self.atoms:
            out = np.zeros_like(u)
        else:
            y, m = self._locs, self._masses
            out = 2.0 * np.sum(np.where(y <= u[..., None], m * y * y, 0.0), axis=-1)
        return out if out.ndim else float(out)

    def psi1(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be nonnegative")
        if not self.atoms:
            out = np.zeros_like(u)
        else:
            y, m = self._locs, self._masses
            out = 2.0 * np.sum(np.where(y > u[..., None], m, 0.0), axis=-1)
        return out if out.ndim else float(out)

    def supports_zero(self):
        return False

    def _sample_sizes(self, eps, n, rng):
        y, m = self._locs, self._masses
        sel = y > eps
        p = m[sel] / m[sel].sum()
        return y[sel][rng.choice(p.size, size=n, p=p)]


@dataclass(frozen=True)
class TableDensity(SymmetricLevyMeasure):
    """A one-sided density given as a vectorised callable.

    ``support`` is the closed interval outside of which the density vanishes.
    Integrability is certified from declared exponents rather than guessed:
    near 0 the density must be ``O(y**(-1-zero_exponent))`` with
    ``zero_exponent < 2``; at infinity ``O(y**(-1-tail_exponent) *
    log(y)**(-tail_log_power))`` with ``tail_exponent > 0`` or
    ``tail_log_power > 1``.  The density must be nonincreasing beyond its last
    breakpoint when the support is unbounded.

    ``envelope = (C, a)`` declares ``density(y) <= C * y**(-1-a)`` on the
    support; it is used for jump sampling by rejection.
    """

    density_fn: Callable = field(compare=False)
    support_: Tuple[float, float] = (0.0, math.inf)
    breakpoints_: Tuple[float, ...] = ()
    zero_exponent: Optional[float] = None
    tail_exponent: Optional[float] = None
    tail_log_power: float = 0.0
    envelope: Optional[Tuple[float, float]] = None
    envelope_fn: Optional[Callable[[float], Tuple[float, float]]] = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        lo, hi = (float(v) for v in self.support_)
        if not (0.0 <= lo <= hi):
            raise ValueError("support must satisfy 0 <= lo <= hi")
        object.__setattr__(self, "support_", (lo, hi))
        object.__setattr__(self, "breakpoints_", tuple(sorted(float(b) for b in self.breakpoints_)))
        if lo < hi:
            if lo == 0.0:
                if self.zero_exponent is None or not self.zero_exponent < 2.0:
                    raise ValueError("a density reaching 0 needs a declared zero_exponent < 2")
            if math.isinf(hi):
                a = self.tail_exponent
                if a is None or a < 0 or (a == 0 and not self.tail_log_power > 1.0):
                    raise ValueError("an unbounded support needs an integrable declared tail")

    @classmethod
    def zero(cls) -> "TableDensity":
        """The zero measure."""
        return cls(lambda y: np.zeros_like(np.asarray(y, dtype=float)),
                   support_=(1.0, 1.0), label="zero")

    @classmethod
    def from_knots(cls, knots: Sequence[Sequence[float]], zero_exponent=None,
                   tail_exponent=None) -> "TableDensity":
        """Piecewise-linear density through ``knots = [(y, p), ...]``.

        With ``zero_exponent`` the density continues below the first knot as
        ``p0 * (y / y0)**(-1-zero_exponent)``, otherwise it vanishes there.
        With ``tail_exponent`` it continues beyond the last knot as
        ``p_last * (y / y_last)**(-1-tail_exponent)``.
        """
        k = np.array(sorted((float(y), float(p)) for y, p in knots))
        if k.ndim != 2 or k.shape[0] < 2 or k.shape[1] != 2:
            raise ValueError("need at least two (y, p) knots")
        ys, ps = k[:, 0], k[:, 1]
        if ys[0] <= 0 or np.any(ps < 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("knots need increasing positive locations and nonnegative values")
        y0, p0, yl, pl = ys[0], ps[0], ys[-1], ps[-1]

        def dens(y):
            y = np.asarray(y, dtype=float)
            out = np.interp(y, ys, ps, left=0.0, right=0.0)
            if zero_exponent is not None:
                out = np.where(y < y0, p0 * (np.maximum(y, 1e-300) / y0) ** (-1.0 - zero_exponent), out)
            if tail_exponent is not None:
                out = np.where(y > yl, pl * (y / yl) ** (-1.0 - tail_exponent), out)
            return out

        lo = 0.0 if zero_exponent is not None else y0
        hi = math.inf if tail_exponent is not None else yl
        a_env = tail_exponent if tail_exponent is not None else 1.0

        def envelope(eps):
            # C with density(y) <= C y**(-1-a_env) for y >= eps
            pieces = np.maximum(ps[:-1], ps[1:]) * ys[1:] ** (1.0 + a_env)
            c = float(np.max(pieces))
            if zero_exponent is not None and eps < y0:
                y = eps if a_env < zero_exponent else y0
                c = max(c, p0 * y0 ** (1.0 + zero_exponent) * y ** (a_env - zero_exponent))
            if tail_exponent is not None:
                c = max(c, pl * yl ** (1.0 + tail_exponent))
            return c, a_env

        return cls(dens, support_=(lo, hi), breakpoints_=tuple(ys),
                   zero_exponent=zero_exponent, tail_exponent=tail_exponent,
                   envelope_fn=envelope, label="knots")

    def support(self):
        return self.support_

    def breakpoints(self):
        return self.breakpoints_

    def density(self, y):
        y = np.asarray(y, dtype=float)
        lo, hi = self.support_
        inside = (y >= lo) & (y <= hi)
        return np.where(inside, self.density_fn(np.where(inside, y, max(lo, 1e-300))), 0.0)

    def is_zero(self):
        return not self.support_[0] < self.support_[1]

    def infinite_activity(self):
        return self.support_[0] == 0.0 and self.support_[0] < self.support_[1]

    def psi1(self, u):
        if self.is_zero():
            u = np.asarray(u, dtype=float)
            out = np.zeros_like(u)
            return out if out.ndim else float(out)
        return super().psi1(u)

    def log_tail_moment(self):
        lo, hi = self.support_
        if self.is_zero() or hi <= 1.0:
            return 0.0
        if math.isinf(hi) and self.tail_exponent == 0.0 and self.tail_log_power <= 2.0:
            # int log(y) / (y log(y)**q) dy diverges for q <= 2
            return math.inf
        try:
            return self.log_moment(1.0, math.inf)
        except QuadratureError:
            return math.inf

    def supports_zero(self):
        lo, hi = self.support_
        return lo == 0.0 and lo < hi

    def _sample_sizes(self, eps, n, rng):
        if self.envelope is not None:
            C, a = self.envelope
        elif self.envelope_fn is not None:
            C, a = self.envelope_fn(eps)
        else:
            raise ValueError("TableDensity jump sampling needs a declared envelope (C, a)")
        lo, hi = self.support_
        start = max(eps, lo)
        out = np.empty(0)
        need = n
        while need > 0:
            m = max(2 * need, 16)
            y = start * rng.uniform(size=m) ** (-1.0 / a)
            env = C * y ** (-1.0 - a)
            acc = rng.uniform(size=m) * env < self.density(y)
            out = np.concatenate([out, y[acc & (y <= hi)][:need]])
            need = n - out.size
        return out


# -- functional interface -------------------------------------------------


def psi(m: SymmetricLevyMeasure, h):
    return m.psi(h)


def psi0(m: SymmetricLevyMeasure, u):
    return m.psi0(u)


def psi1(m: SymmetricLevyMeasure, u):
    return m.psi1(u)


def log_tail_moment(m: SymmetricLevyMeasure) -> float:
    return m.log_tail_moment()


def supports_zero(m: SymmetricLevyMeasure) -> bool:
    return m.supports_zero()


def sample_jump_arrays(m: SymmetricLevyMeasure, eps: float, T: float, rng, size: int = 1):
    """Vectorised jump sampler for ``size`` independent paths.

    Returns ``(counts, times, sizes)``: the jumps of path ``i`` occupy the
    slice ``offsets[i]:offsets[i+1]`` with ``offsets = cumsum([0, *counts])``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not T > 0:
        raise ValueError("horizon must be positive")
    rate = 0.0 if m.is_zero() else float(m.psi1(eps))
    if rate == 0.0:
        return np.zeros(size, dtype=np.int64), np.empty(0), np.empty(0)
    counts = rng.poisson(rate * T, size=size)
    total = int(counts.sum())
    mags = m._sample_sizes(eps, total, rng)
    signs = np.where(rng.uniform(size=total) < 0.5, -1.0, 1.0)
    times = rng.uniform(0.0, T, size=total)
    return counts, times, signs * mags


def sample_jumps(m: SymmetricLevyMeasure, eps: float, T: float, rng) -> list:
    """Jumps of size ``|y| > eps`` on ``[0, T]``, sorted by time."""
    _, times, sizes = sample_jump_arrays(m, eps, T, rng, size=1)
    order = np.argsort(times, kind="stable")
    return [JumpRecord(float(times[i]), float(sizes[i])) for i in order]


def image_measure(m: SymmetricLevyMeasure, beta: float) -> SymmetricLevyMeasure:
    """Image of ``m`` under ``y -> beta * y`` (``beta > 0``)."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    if isinstance(m, CompoundPoissonSymmetric):
        return CompoundPoissonSymmetric(tuple((beta * y, w) for y, w in m.atoms))
    if m.is_zero():
        return m
    lo, hi = m.support()
    za = getattr(m, "zero_exponent", None)
    ta = getattr(m, "tail_exponent", None)
    if isinstance(m, (StableFamily, TemperedStable)):
        za = ta = m.alpha
    env = getattr(m, "envelope", None)
    if env is not None:
        env = (env[0] * beta ** env[1], env[1])
    return TableDensity(
        lambda y, _m=m: _m.density(np.asarray(y, dtype=float) / beta) / beta,
        support_=(beta * lo, beta * hi),
        breakpoints_=tuple(beta * p for p in m.breakpoints()),
        zero_exponent=za,
        tail_exponent=ta,
        tail_log_power=getattr(m, "tail_log_power", 0.0),
        envelope=env,
        label="image",
    )


def measure_from_record(rec: dict) -> SymmetricLevyMeasure:
    """Build a measure from a config record such as ``{"type": "stable", "alpha": 1.5}``."""
    kind = rec.get("type")
    if kind == "stable":
        return StableFamily(float(rec["alpha"]))
    if kind == "tempered":
        return TemperedStable(float(rec["alpha"]), float(rec["lambda"]))
    if kind == "cp":
        return CompoundPoissonSymmetric(tuple((float(y), float(w)) for y, w in rec["atoms"]))
    if kind == "table":
        if rec.get("zero"):
            return TableDensity.zero()
        return TableDensity.from_knots(rec["knots"], rec.get("zero_exponent"),
                                       rec.get("tail_exponent"))
    raise ValueError(f"unknown measure type {kind!r}")
