"""Shared numerical plumbing.

Adaptive Gauss-Kronrod quadrature (finite and semi-infinite ranges), an
accelerated cosine-tail integrator, a certified series classifier and two
goodness-of-fit statistics (empirical characteristic function and the
one-sample Kolmogorov-Smirnov distance).
"""
from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "QuadratureError",
    "QuadratureResult",
    "integrate",
    "integrate_cos_tail",
    "Verdict",
    "SeriesVerdict",
    "TailBounds",
    "classify_series",
    "power_tail_bounds",
    "empirical_cf",
    "ks_distance",
    "wilson_interval",
]

# Kronrod 15-point nodes/weights on [-1, 1]; the Gauss 7-point rule uses the
# odd-indexed nodes.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_WEIGHTS_K = np.concatenate([_WK[:-1], _WK[::-1]])
_WEIGHTS_G = np.zeros(15)
_WEIGHTS_G[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])

_EPS = np.finfo(float).eps


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature exhausts its budget.

    The best available estimate is attached as ``result``.
    """

    def __init__(self, message: str, result: "QuadratureResult"):
        super().__init__(f"quadrature failed: {message} "
                         f"(value={result.value!r}, error~{result.error_estimate:.3g})")
        self.result = result


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int

    def __float__(self) -> float:
        return self.value


def _eval(f, x):
    y = f(x)
    y = np.asarray(y, dtype=float)
    if y.shape != np.shape(x):
        y = np.array([float(f(xi)) for xi in x])
    return y


def _gk15(f, lo, hi):
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    fx = _eval(f, centre + half * _NODES)
    if not np.all(np.isfinite(fx)):
        raise FloatingPointError(f"non-finite integrand on [{lo}, {hi}]")
    k = half * np.dot(_WEIGHTS_K, fx)
    g = half * np.dot(_WEIGHTS_G, fx)
    resabs = abs(half) * np.dot(_WEIGHTS_K, np.abs(fx))
    resasc = abs(half) * np.dot(_WEIGHTS_K, np.abs(fx - k / (hi - lo) if hi != lo else fx))
    err = abs(k - g)
    # QUADPACK error scaling
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50 * _EPS):
        err = max(err, 50 * _EPS * resabs)
    return float(k), float(err)


def integrate(
    f: Callable,
    a: float,
    b: float,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-10,
    points: Optional[Sequence[float]] = None,
    max_intervals: int = 4000,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod (7/15) quadrature of ``f`` over ``[a, b]``.

    ``f`` is called with 1-D arrays of abscissae; a scalar-only callable is
    accepted and evaluated pointwise.  ``b`` may be ``+inf``: the range is then
    mapped to ``s in (0, 1)`` through ``y = a + s / (1 - s)``.  Endpoints are
    never sampled, so integrable endpoint singularities are fine; interior
    singularities or kinks should be passed in ``points``.

    The interval with the largest error estimate is bisected until the summed
    estimate drops below ``max(abs_tol, rel_tol * |value|)``; a
    :class:`QuadratureError` carrying the best estimate is raised otherwise.
    """
    if not (abs_tol > 0 and rel_tol > 0):
        raise ValueError("tolerances must be positive")
    a = float(a)
    b = float(b)
    if math.isinf(a) or math.isnan(a) or math.isnan(b):
        raise ValueError("lower limit must be finite")
    if not a < b:
        if a == b:
            return QuadratureResult(0.0, 0.0, 1)
        raise ValueError("require a < b")

    if math.isinf(b):
        g = f

        # y = a + s/(1 - s) parametrised by t = 1 - s, so the point at
        # infinity sits at t = 0 where floating point resolution is finest.
        def f(t, _g=g, _a=a):
            t = np.asarray(t, dtype=float)
            v = _eval(_g, _a + (1.0 - t) / t)
            # decaying integrands may underflow to zero before t*t does
            with np.errstate(invalid="ignore", over="ignore"):
                out = v / t / t
            return np.where(v == 0.0, 0.0, out)

        brk = [1.0 / (1.0 + p - a) for p in (points or ()) if a < p < math.inf]
        lo, hi = 0.0, 1.0
    else:
        brk = [float(p) for p in (points or ()) if a < p < b]
        lo, hi = a, b

    edges = sorted({lo, hi, *brk})
    heap = []
    nevals = 0
    value = error = 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        try:
            v, e = _gk15(f, x0, x1)
        except FloatingPointError as exc:
            raise QuadratureError(str(exc), QuadratureResult(math.nan, math.inf, max(nevals, 1)))
        nevals += 15
        value += v
        error += e
        heapq.heappush(heap, (-e, x0, x1, v))
    frozen = []

    def exact_totals():
        items = heap + frozen
        return math.fsum(i[3] for i in items), math.fsum(-i[0] for i in items)

    value, error = exact_totals()
    n_intervals = len(heap)
    while True:
        if error <= max(abs_tol, rel_tol * abs(value)):
            value, error = exact_totals()
            if error <= max(abs_tol, rel_tol * abs(value)):
                break
        if not heap:
            raise QuadratureError("round-off limit reached",
                                  QuadratureResult(value, error, nevals))
        if n_intervals >= max_intervals:
            value, error = exact_totals()
            raise QuadratureError("evaluation budget exhausted",
                                  QuadratureResult(value, error, nevals))
        item = heapq.heappop(heap)
        neg_e, x0, x1, v = item
        if (x1 - x0) <= 1e-12 * max(abs(x0), abs(x1)) or (x1 - x0) < 1e-300:
            # nodes would collide with the endpoints; keep as is
            frozen.append(item)
            continue
        mid = 0.5 * (x0 + x1)
        try:
            v1, e1 = _gk15(f, x0, mid)
            v2, e2 = _gk15(f, mid, x1)
        except FloatingPointError as exc:
            raise QuadratureError(str(exc), QuadratureResult(value, error, nevals))
        nevals += 30
        n_intervals += 1
        value += v1 + v2 - v
        error += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, x0, mid, v1))
        heapq.heappush(heap, (-e2, mid, x1, v2))
    return QuadratureResult(float(value), float(error), nevals)


def _wynn_epsilon(partial_sums: Sequence[float]) -> float:
    """Wynn epsilon extrapolation of a sequence of partial sums."""
    s = [float(v) for v in partial_sums]
    n = len(s)
    if n < 3:
        return s[-1]
    prev = [0.0] * (n + 1)
    cur = list(s)
    best = s[-1]
    for k in range(1, n):
        nxt = []
        for j in range(len(cur) - 1):
            diff = cur[j + 1] - cur[j]
            if diff == 0.0:
                return cur[j + 1]
            nxt.append(prev[j + 1] + 1.0 / diff)
        prev, cur = cur, nxt
        if k % 2 == 0 and cur:
            best = cur[-1]
        if len(cur) < 2:
            break
    return best


def integrate_cos_tail(
    g: Callable,
    a: float,
    omega: float,
    abs_tol: float = 1e-12,
    max_cycles: int = 200,
) -> float:
    """``int_a^inf g(y) cos(omega y) dy`` for ``g`` decreasing to zero.

    The integral is split at the zeros of the cosine into an alternating
    series whose partial sums are accelerated with Wynn's epsilon algorithm.
    """
    omega = abs(float(omega))
    if omega == 0.0:
        raise ValueError("omega must be nonzero")
    half = math.pi / omega
    # first zero of cos(omega y) at or after a
    k0 = math.ceil((omega * a - 0.5 * math.pi) / math.pi)
    z0 = (k0 + 0.5) * half
    f = lambda y: _eval(g, y) * np.cos(omega * y)  # noqa: E731
    head = integrate(f, a, z0, abs_tol=abs_tol, rel_tol=1e-13).value if z0 > a else 0.0
    sums = []
    running = 0.0
    estimates = []
    for k in range(max_cycles):
        lo = z0 + k * half
        running += integrate(f, lo, lo + half, abs_tol=abs_tol * 1e-2, rel_tol=1e-13).value
        sums.append(running)
        if len(sums) >= 7 and len(sums) % 2 == 1:
            est = _wynn_epsilon(sums[-21:])
            estimates.append(est)
            if len(estimates) >= 2 and abs(estimates[-1] - estimates[-2]) < abs_tol:
                return head + est
    if estimates:
        return head + estimates[-1]
    return head + running


class Verdict(str, enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SeriesVerdict:
    verdict: Verdict
    partial_sum: float
    tail_bound: Optional[float]
    terms_used: int
    note: str = ""

    def __post_init__(self):
        if self.verdict is Verdict.CONVERGED:
            if self.tail_bound is None or not self.tail_bound >= 0:
                raise ValueError("a Converged verdict needs a nonnegative tail bound")


@dataclass(frozen=True)
class TailBounds:
    """Certified bounds ``lower <= sum_{n > N} term(n) <= upper``."""

    lower: float
    upper: float


def power_tail_bounds(N: int, coef: float, q: float) -> TailBounds:
    """Integral-test bounds for ``sum_{n > N} coef * n**(-q)``."""
    if coef == 0.0:
        return TailBounds(0.0, 0.0)
    if q <= 1.0:
        return TailBounds(math.inf, math.inf)
    lower = coef * (N + 1.0) ** (1.0 - q) / (q - 1.0)
    upper = coef * float(N) ** (1.0 - q) / (q - 1.0) if N >= 1 else math.inf
    return TailBounds(lower, upper)


def _term_values(term, ns):
    try:
        vals = np.asarray(term(ns), dtype=float)
        if vals.shape != ns.shape:
            raise TypeError
    except Exception:
        vals = np.array([float(term(int(n))) for n in ns])
    return vals


def classify_series(
    term: Callable,
    n_max: int,
    tol: float = 1e-8,
    monotone_hint: bool = False,
    tail: Optional[Callable[[int], TailBounds]] = None,
    values: Optional[np.ndarray] = None,
) -> SeriesVerdict:
    """Decide convergence of ``sum_{n >= 1} term(n)`` without overclaiming.

    With a caller-supplied ``tail`` certificate the verdict is exact:
    Converged when the upper bound on the remainder is finite (the bound is
    reported as ``tail_bound``), Diverged when the lower bound is infinite.

    With ``monotone_hint`` (terms nonincreasing) the Cauchy-condensed terms
    ``c_k = N 2**k term(N 2**k)`` bound the remainder from both sides.  A
    geometric decay of the ``c_k`` that certifies a remainder below ``tol``
    gives Converged; condensed terms that do not decay at all give Diverged.
    Everything else is Inconclusive.  ``values`` may carry the first
    ``n_max`` terms when the caller has already computed them.
    """
    if n_max < 16:
        raise ValueError("n_max must be at least 16")
    ns = np.arange(1, n_max + 1)
    if values is not None:
        vals = np.asarray(values, dtype=float)[:n_max]
    else:
        vals = _term_values(term, ns)
    if np.any(vals < 0) or np.any(np.isnan(vals)):
        raise ValueError("series terms must be nonnegative")
    partial = math.fsum(vals)

    if tail is not None:
        bounds = tail(n_max)
        if math.isinf(bounds.lower):
            return SeriesVerdict(Verdict.DIVERGED, partial, None, n_max,
                                 "closed-form tail: divergent")
        if math.isfinite(bounds.upper):
            note = "closed-form tail"
            if bounds.upper >= tol:
                note += f"; remainder bound {bounds.upper:.3g} exceeds tol"
            return SeriesVerdict(Verdict.CONVERGED, partial, float(bounds.upper), n_max, note)
        return SeriesVerdict(Verdict.INCONCLUSIVE, partial, None, n_max,
                             "tail certificate gives no finite bound")

    if vals[-1] == 0.0 and (monotone_hint or not np.any(vals)):
        if monotone_hint:
            return SeriesVerdict(Verdict.CONVERGED, partial, 0.0, n_max,
                                 "monotone terms vanish")

    if monotone_hint:
        if np.any(np.diff(vals) > 1e-12 * np.maximum(vals[:-1], 1e-300)):
            return SeriesVerdict(Verdict.INCONCLUSIVE, partial, None, n_max,
                                 "terms are not nonincreasing")
        K = 60
        pts = float(n_max) * 2.0 ** np.arange(K + 1)
        fk = _term_values(term, pts)
        if np.any(fk < 0):
            raise ValueError("series terms must be nonnegative")
        c = pts * fk
        if c[-1] >= 0.5 * c[0] and c[0] > 0:
            # condensed terms do not tend to zero: tail >= 1/2 sum c_k grows without bound
            return SeriesVerdict(Verdict.DIVERGED, partial, None, n_max,
                                 "condensed terms do not decay")
        zero = np.nonzero(c == 0.0)[0]
        if zero.size:
            kz = int(zero[0])
            upper = math.fsum(c[:kz])
            if upper < tol:
                return SeriesVerdict(Verdict.CONVERGED, partial, upper, n_max,
                                     "condensation bound, terms vanish")
            return SeriesVerdict(Verdict.INCONCLUSIVE, partial, None, n_max,
                                 "condensation bound above tol")
        ratios = c[1:] / c[:-1]
        # geometric decay over the last half of the condensed range
        r = float(np.max(ratios[K // 2:]))
        if r < 0.9:
            upper = math.fsum(c) + c[-1] * r / (1.0 - r)
            if upper < tol:
                return SeriesVerdict(Verdict.CONVERGED, partial, upper, n_max,
                                     "condensation with geometric tail")
        return SeriesVerdict(Verdict.INCONCLUSIVE, partial, None, n_max,
                             "no tail certificate below tol")

    return SeriesVerdict(Verdict.INCONCLUSIVE, partial, None, n_max,
                         "no tail certificate supplied")


def empirical_cf(samples, h: float) -> complex:
    """``(1/M) sum_m exp(i h x_m)``, summed with correctly rounded ``fsum``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empirical_cf needs at least one sample")
    hx = h * x
    re = math.fsum(np.cos(hx)) / x.size
    im = math.fsum(np.sin(hx)) / x.size
    return complex(re, im)


def ks_distance(samples, cdf: Callable) -> float:
    """Sup-distance between the empirical CDF of ``samples`` and ``cdf``.

    ``cdf`` must be continuous and vectorised.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("ks_distance needs at least one sample")
    return float(stats.ks_1samp(x, cdf, method="asymp").statistic)


def wilson_interval(hits: int, trials: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = hits / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == trials else min(1.0, centre + half)
    return lo, hi
