"""Computable membership criteria for the cylindrical noise and the OU process.

``cylindrical_term(m, beta)`` is ``int (1 ^ (beta y)^2) nu(dy)``, the summand
deciding whether ``sum_n beta_n Z_t^n e_n`` lives in ``H``.  ``ou_term`` is
the corresponding summand for the Ornstein-Uhlenbeck process,

    (1/gamma) int_{1/beta}^{exp(gamma t0)/beta} (psi0(u)/u^3 + psi1(u)/u) du,

evaluated after the substitution ``u = exp(gamma s)/beta`` so that large
``gamma`` never overflows.  Series verdicts are only certified when a
closed-form tail bound is available; otherwise they are honest
``Inconclusive`` answers.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .levy_measure import (
    CompoundPoissonSymmetric,
    StableFamily,
    SymmetricLevyMeasure,
    TemperedStable,
)
from .model import (
    ExplicitBeta,
    GeometricBeta,
    LaplacianGamma,
    LogGamma,
    PowerBeta,
    PowerGamma,
    Spectrum,
)
from .numerics import (
    SeriesVerdict,
    TailBounds,
    Verdict,
    classify_series,
    integrate,
    power_tail_bounds,
)

__all__ = [
    "CriterionKind",
    "CriterionReport",
    "SufficientReport",
    "F0Result",
    "cylindrical_term",
    "cylindrical_criterion",
    "ou_term",
    "ou_criterion",
    "sufficient_check",
    "f0_closed_form",
    "admissible_weight",
    "stable_K",
]

_QTOL = 1e-10
_LOG_UMAX = 700.0


class CriterionKind(str, enum.Enum):
    CYLINDRICAL = "Cylindrical"
    OU = "OU"
    SUFFICIENT = "Sufficient"


@dataclass
class CriterionReport:
    kind: CriterionKind
    terms: np.ndarray
    partial_sums: np.ndarray
    verdict: SeriesVerdict
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        v = self.verdict
        return {
            "kind": self.kind.value,
            "verdict": v.verdict.value,
            "partial_sum": v.partial_sum,
            "tail_bound": v.tail_bound,
            "terms_used": v.terms_used,
            "notes": list(self.notes) + ([v.note] if v.note else []),
        }

    def rows(self):
        """``(n, term, partial_sum)`` rows."""
        return [(i + 1, float(t), float(s))
                for i, (t, s) in enumerate(zip(self.terms, self.partial_sums))]


def stable_K(alpha: float) -> float:
    """``2/(2-alpha) + 2/alpha``: ``cylindrical_term = K beta**alpha`` for stable nu."""
    return 2.0 / (2.0 - alpha) + 2.0 / alpha


# -- single terms ------------------------------------------------------------


def cylindrical_term(m: SymmetricLevyMeasure, beta):
    """``beta^2 psi0(1/beta) + psi1(1/beta)``."""
    b = np.asarray(beta, dtype=float)
    if np.any(b <= 0):
        raise ValueError("beta must be positive")
    if m.is_zero():
        out = np.zeros_like(b)
    else:
        u = 1.0 / b
        out = b * b * np.asarray(m.psi0(u)) + np.asarray(m.psi1(u))
    return out if np.ndim(out) else float(out)


def _G(z, gamma, t0):
    # int_0^t0 min(1, z^2 exp(-2 gamma s)) ds
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        logz = np.log(z)
    small = -np.expm1(-2.0 * gamma * t0) / (2.0 * gamma)
    s_star = np.where(z > 1.0, logz / gamma, 0.0)
    big = np.where(s_star >= t0, t0,
                   s_star + -np.expm1(-2.0 * gamma * np.maximum(t0 - s_star, 0.0)) / (2.0 * gamma))
    zc = np.minimum(z, 1.0)
    return np.where(z <= 1.0, zc * zc * small, big)


def _ou_closed(m, beta, gamma, t0):
    if isinstance(m, StableFamily):
        a = m.alpha
        return stable_K(a) * beta ** a * -math.expm1(-a * gamma * t0) / (a * gamma)
    if isinstance(m, CompoundPoissonSymmetric):
        if not m.atoms:
            return 0.0
        return math.fsum(2.0 * w * float(_G(beta * y, gamma, t0)) for y, w in m.atoms)
    return None


def _ou_fubini(m, beta, gamma, t0):
    # 2 int p(y) G(beta y) dy; below 1/beta, G is quadratic in y so that
    # piece is beta^2 psi0(1/beta) times the time factor
    lo, hi = m.support()
    if not lo < hi:
        return 0.0
    u = 1.0 / beta
    small = -math.expm1(-2.0 * gamma * t0) / (2.0 * gamma)
    head = beta * beta * small * float(m.psi0(u)) if lo < u else 0.0
    a = max(lo, u)
    if a >= hi:
        return head
    pts = list(m.breakpoints())
    if gamma * t0 < 700:
        pts.append(math.exp(gamma * t0) / beta)
    pts = sorted(p for p in pts if a < p < hi)
    f = lambda y: m.density(y) * _G(beta * y, gamma, t0)  # noqa: E731
    return head + 2.0 * integrate(f, a, hi, abs_tol=1e-300, rel_tol=_QTOL,
                                  points=pts, max_intervals=20000).value


def _ou_direct(m, beta, gamma, t0):
    # s-substituted form of the displayed integral, written in v = log u so
    # that beta^2 exp(-2 gamma s) = exp(-2 v); u is clipped below overflow,
    # where both pieces are already negligible for any Levy measure in use
    lb = math.log(beta)

    def f(s):
        v = gamma * np.asarray(s, dtype=float) - lb
        u = np.exp(np.minimum(v, _LOG_UMAX))
        return np.exp(-2.0 * v) * np.asarray(m.psi0(u)) + np.asarray(m.psi1(u))

    if m.is_zero():
        return 0.0
    pts = []
    if isinstance(m, CompoundPoissonSymmetric):
        pts = [math.log(beta * y) / gamma for y, _ in m.atoms if beta * y > 1]
    # the integrand decays on the scale 1/gamma; seed the mesh accordingly
    k = 1.0 / gamma
    while k < t0:
        pts.append(k)
        k *= 4.0
    pts = sorted(p for p in set(pts) if 0.0 < p < t0)
    return integrate(f, 0.0, t0, abs_tol=1e-300, rel_tol=_QTOL, points=pts,
                     max_intervals=20000).value


def ou_term(m: SymmetricLevyMeasure, beta: float, gamma: float, t0: float = 1.0,
            method: str = "auto") -> float:
    """Summand of the OU membership series for one mode.

    ``method`` is ``"closed"`` (stable and compound Poisson only),
    ``"fubini"`` (single quadrature against the density), ``"direct"``
    (quadrature of the displayed ``psi0``/``psi1`` integral) or ``"auto"``.
    """
    if not (beta > 0 and gamma > 0 and t0 > 0):
        raise ValueError("beta, gamma and t0 must be positive")
    if m.is_zero():
        return 0.0
    if method in ("auto", "closed"):
        val = _ou_closed(m, beta, gamma, t0)
        if val is not None:
            return float(val)
        if method == "closed":
            raise ValueError("no closed form for this measure")
        method = "fubini"
    if method == "fubini":
        if isinstance(m, CompoundPoissonSymmetric):
            return float(_ou_closed(m, beta, gamma, t0))
        return _ou_fubini(m, beta, gamma, t0)
    if method == "direct":
        return _ou_direct(m, beta, gamma, t0)
    raise ValueError(f"unknown method {method!r}")


# -- tail certificates -------------------------------------------------------


def _beta_power_tail(beta_rule, a: float, N: int) -> Optional[TailBounds]:
    """Bounds on ``sum_{n > N} beta_n**a``."""
    if isinstance(beta_rule, PowerBeta):
        coef, q = beta_rule.power_form(a)
        return power_tail_bounds(N, coef, q)
    if isinstance(beta_rule, GeometricBeta):
        r = beta_rule.r ** a
        if r >= 1.0:
            return TailBounds(math.inf, math.inf)
        v = beta_rule.c ** a * r ** (N + 1) / (1.0 - r)
        return TailBounds(v, v)
    return None


def _weighted_tail(spectrum: Spectrum, a: float, N: int) -> Optional[TailBounds]:
    """Bounds on ``sum_{n > N} beta_n**a / gamma_n``."""
    br, gr = spectrum.beta, spectrum.gamma
    if isinstance(br, ExplicitBeta) or spectrum.size is not None:
        return None
    g_next = float(spectrum.gammas(N + 1)[-1])
    pb = gr.power_bounds() if hasattr(gr, "power_bounds") else None
    if isinstance(br, GeometricBeta):
        r = br.r ** a
        if r < 1.0:
            return TailBounds(0.0, br.c ** a * r ** (N + 1) / (1.0 - r) / g_next)
        if r > 1.0:
            return TailBounds(math.inf, math.inf)
        coef, q = br.c ** a, 0.0
    else:
        coef, q = br.power_form(a)
    if pb is not None:
        c_lo, c_hi, e = pb
        up = power_tail_bounds(N, coef / c_lo, q + e).upper
        low = power_tail_bounds(N, coef / c_hi, q + e).lower
        return TailBounds(low, up)
    if isinstance(gr, LogGamma):
        if q <= 1.0:
            # n**-q / log(n+1) >= 1 / (n log(n+1)), whose sum diverges
            return TailBounds(math.inf, math.inf)
        return TailBounds(0.0, power_tail_bounds(N, coef, q).upper / math.log(N + 2.0))
    return None


def _report(kind, terms, verdict, notes):
    terms = np.asarray(terms, dtype=float)
    return CriterionReport(kind, terms, np.cumsum(terms), verdict, notes)


def _classify(term_fn, values, n_max, tol, tail, monotone, finite=False):
    notes = []
    if finite:
        # a finite spectrum is a finite sum
        vals = np.asarray(values, dtype=float)
        return SeriesVerdict(Verdict.CONVERGED, math.fsum(vals), 0.0, vals.size,
                             "finite spectrum: exact sum"), notes
    verdict = None
    if tail is not None:
        verdict = classify_series(term_fn, n_max, tol, tail=tail, values=values)
        if verdict.verdict is not Verdict.INCONCLUSIVE:
            return verdict, notes
        notes.append("closed-form tail not decisive")
    if monotone:
        verdict = classify_series(term_fn, n_max, tol, monotone_hint=True, values=values)
        notes.append("monotone terms: condensation test (heuristic for black-box terms)")
    elif verdict is None:
        verdict = classify_series(term_fn, n_max, tol, values=values)
    return verdict, notes


def _betas_of(betas, N):
    if isinstance(betas, Spectrum):
        betas = betas.beta
    return betas


def cylindrical_criterion(m: SymmetricLevyMeasure, betas, n_max: int = 1000,
                          tol: float = 1e-6) -> CriterionReport:
    """Is ``sum_n cylindrical_term(m, beta_n)`` finite?

    ``betas`` is a beta rule or a :class:`Spectrum`.
    """
    rule = _betas_of(betas, n_max)
    if isinstance(rule, ExplicitBeta):
        n_max = min(n_max, len(rule.vals))
    vals = np.asarray(cylindrical_term(m, rule.values(n_max)), dtype=float).reshape(-1)
    term_fn = lambda n: cylindrical_term(m, rule.at(n))  # noqa: E731

    tail = None
    if m.is_zero():
        tail = lambda N: TailBounds(0.0, 0.0)  # noqa: E731
    elif isinstance(m, StableFamily):
        K = stable_K(m.alpha)

        def tail(N):
            tb = _beta_power_tail(rule, m.alpha, N)
            return None if tb is None else TailBounds(K * tb.lower, K * tb.upper)
    elif isinstance(m, CompoundPoissonSymmetric):
        s0 = 2.0 * sum(w * y * y for y, w in m.atoms)

        def tail(N):
            tb = _beta_power_tail(rule, 2.0, N)
            if tb is None:
                return None
            b1 = float(rule.values(1)[0])
            if rule.nonincreasing:
                low_c = 2.0 * sum(w * min(y, 1.0 / b1) ** 2 for y, w in m.atoms)
                return TailBounds(low_c * tb.lower, s0 * tb.upper)
            return TailBounds(math.inf, math.inf)
    elif isinstance(m, TemperedStable):
        K = stable_K(m.alpha)

        def tail(N):
            # tempering only removes mass: dominated by the stable term
            tb = _beta_power_tail(rule, m.alpha, N)
            return None if tb is None else TailBounds(0.0, K * tb.upper)

    wrapped = None
    if tail is not None:
        def wrapped(N, _t=tail):
            tb = _t(N)
            return tb if tb is not None else TailBounds(0.0, math.inf)
    verdict, notes = _classify(term_fn, vals, n_max, tol, wrapped,
                               monotone=rule.nonincreasing and not isinstance(rule, ExplicitBeta),
                               finite=isinstance(rule, ExplicitBeta))
    return _report(CriterionKind.CYLINDRICAL, vals, verdict, notes)


def ou_criterion(m: SymmetricLevyMeasure, spectrum: Spectrum, n_max: int = 1000,
                 tol: float = 1e-6, t0: float = 1.0) -> CriterionReport:
    """Is ``sum_n ou_term(m, beta_n, gamma_n, t0)`` finite?"""
    if spectrum.size is not None:
        n_max = min(n_max, spectrum.size)
    betas, gammas = spectrum.betas(n_max), spectrum.gammas(n_max)
    if isinstance(m, StableFamily):
        a = m.alpha
        vals = stable_K(a) * betas ** a * -np.expm1(-a * gammas * t0) / (a * gammas)
    elif isinstance(m, CompoundPoissonSymmetric):
        vals = np.zeros(n_max)
        for y, w in m.atoms:
            vals = vals + 2.0 * w * _G(betas * y, gammas, t0)
    else:
        vals = np.array([ou_term(m, b, g, t0) for b, g in zip(betas, gammas)])

    def term_fn(n):
        n = np.atleast_1d(np.asarray(n, dtype=float))
        if np.all(n <= n_max) and np.all(n == np.round(n)):
            return vals[n.astype(int) - 1]
        g = _gamma_at(spectrum, n)
        b = spectrum.beta.at(n)
        return np.array([ou_term(m, bi, gi, t0) for bi, gi in zip(b, g)])

    tail = None
    if m.is_zero():
        tail = lambda N: TailBounds(0.0, 0.0)  # noqa: E731
    elif isinstance(m, (StableFamily, TemperedStable)):
        a = m.alpha
        C = stable_K(a) / a
        stable = isinstance(m, StableFamily)

        def tail(N):
            tb = _weighted_tail(spectrum, a, N)
            if tb is None:
                return TailBounds(0.0, math.inf)
            if not stable:
                return TailBounds(0.0, C * tb.upper)
            g_next = float(spectrum.gammas(N + 1)[-1])
            low = C * -math.expm1(-a * g_next * t0) * tb.lower
            return TailBounds(low, C * tb.upper)
    elif isinstance(m, CompoundPoissonSymmetric):
        s0 = 2.0 * sum(w * y * y for y, w in m.atoms)
        rule = spectrum.beta

        def tail(N):
            tb2 = _weighted_tail(spectrum, 2.0, N)
            if tb2 is None:
                return TailBounds(0.0, math.inf)
            g_next = float(spectrum.gammas(N + 1)[-1])
            fac = -math.expm1(-2.0 * g_next * t0) / 2.0
            b1 = float(rule.values(1)[0])
            if rule.nonincreasing:
                low = fac * 2.0 * sum(w * min(y, 1.0 / b1) ** 2 for y, w in m.atoms) * tb2.lower
            else:
                tb0 = _weighted_tail(spectrum, 0.0, N)
                low = fac * 2.0 * sum(w * min(1.0, b1 * y) ** 2 for y, w in m.atoms) * tb0.lower
            return TailBounds(low, 0.5 * s0 * tb2.upper)

    monotone = (spectrum.size is None and spectrum.beta.nonincreasing
                and _pointwise_gamma(spectrum))
    verdict, notes = _classify(term_fn, vals, n_max, tol, tail, monotone,
                               finite=spectrum.size is not None)
    notes.insert(0, f"t0={t0:g}")
    return _report(CriterionKind.OU, vals, verdict, notes)


def _pointwise_gamma(spectrum) -> bool:
    # can gamma_n be evaluated at astronomically large n?
    gr = spectrum.gamma
    return (isinstance(gr, (PowerGamma, LogGamma))
            or (isinstance(gr, LaplacianGamma) and gr.d == 1))


def _gamma_at(spectrum, n):
    gr = spectrum.gamma
    n = np.asarray(n, dtype=float)
    if isinstance(gr, PowerGamma):
        return gr.c * n ** gr.p
    if isinstance(gr, LogGamma):
        return np.log1p(n)
    if isinstance(gr, LaplacianGamma) and gr.d == 1:
        return n * n
    return spectrum.gammas(int(np.max(n)))[n.astype(int) - 1]


@dataclass
class SufficientReport:
    beta_bounded: bool
    log_moment_finite: bool
    inv_gamma_summable: SeriesVerdict
    applies: bool
    log_moment: float = math.nan

    def to_dict(self) -> dict:
        v = self.inv_gamma_summable
        return {
            "kind": CriterionKind.SUFFICIENT.value,
            "beta_bounded": self.beta_bounded,
            "log_moment": self.log_moment,
            "log_moment_finite": self.log_moment_finite,
            "inv_gamma_summable": v.verdict.value,
            "inv_gamma_partial_sum": v.partial_sum,
            "inv_gamma_tail_bound": v.tail_bound,
            "applies": self.applies,
        }


def sufficient_check(m: SymmetricLevyMeasure, spectrum: Spectrum, n_max: int = 1000,
                     tol: float = 1e-6) -> SufficientReport:
    """Bounded weights, finite log moment and summable ``1/gamma_n``.

    When ``applies`` is true the OU process lives in ``H`` and has a unique
    invariant measure.
    """
    if spectrum.size is not None:
        n_max = min(n_max, spectrum.size)
    lm = m.log_tail_moment()
    vals = 1.0 / spectrum.gammas(n_max)

    def term_fn(n):
        n = np.atleast_1d(np.asarray(n, dtype=float))
        if np.all(n <= n_max):
            return vals[n.astype(int) - 1]
        return 1.0 / _gamma_at(spectrum, n)

    flat = Spectrum(spectrum.gamma, PowerBeta(1.0, 0.0)) if spectrum.size is None else spectrum

    def tail(N):
        tb = _weighted_tail(flat, 0.0, N)
        return tb if tb is not None else TailBounds(0.0, math.inf)

    verdict, _ = _classify(term_fn, vals, n_max, tol, tail,
                           monotone=spectrum.size is None and _pointwise_gamma(spectrum),
                           finite=spectrum.size is not None)
    bounded = bool(spectrum.beta.bounded)
    finite = math.isfinite(lm)
    applies = bounded and finite and verdict.verdict is Verdict.CONVERGED
    return SufficientReport(bounded, finite, verdict, applies, lm)


@dataclass(frozen=True)
class F0Result:
    f0: float
    via_identity: float


def f0_closed_form(m: SymmetricLevyMeasure, b: float) -> F0Result:
    """``f0(b) = int_1^b (psi0(u)/u^3 + psi1(u)/u) du`` computed two ways.

    ``f0`` is a direct quadrature (in ``v = log u``); ``via_identity`` uses
    the Fubini identities that express the two pieces through one-sided
    integrals of ``nu``:

        int_1^b psi1(u)/u du   = 2 int_(1,b] log y nu(dy) + 2 log(b) nu((b, inf))
        int_1^b psi0(u)/u^3 du = nu((1,b]) + int_[0,1] y^2 nu(dy) - b^-2 int_[0,b] y^2 nu(dy)
    """
    if not b >= 1:
        raise ValueError("b must be at least 1")
    if b == 1 or m.is_zero():
        return F0Result(0.0, 0.0)
    L = math.log(b)

    def f(v):
        u = np.exp(v)
        return np.exp(-2.0 * v) * np.asarray(m.psi0(u)) + np.asarray(m.psi1(u))

    pts = []
    if isinstance(m, CompoundPoissonSymmetric):
        pts = [math.log(y) for y, _ in m.atoms if 1.0 < y < b]
    direct = integrate(f, 0.0, L, abs_tol=1e-300, rel_tol=_QTOL, points=pts,
                       max_intervals=20000).value

    part1 = 2.0 * m.log_moment(1.0, b) + 2.0 * L * m.mass(b, math.inf)
    part0 = m.mass(1.0, b) + m.second_moment(0.0, 1.0) - m.second_moment(0.0, b) / (b * b)
    return F0Result(direct, part1 + part0)


def admissible_weight(m: SymmetricLevyMeasure, betas, n_max: int, target=None,
                      rel_tol: float = 1e-12) -> np.ndarray:
    """Weights ``rho_n`` with ``cylindrical_term(m, rho_n beta_n) <= target(n)``.

    ``target`` defaults to ``2**-n``.  Each ``rho_n`` is the largest value
    found by bisection in ``log rho`` (``rho_n = 1`` when the unweighted term
    already meets the target); the weighted series then converges.
    """
    rule = _betas_of(betas, n_max)
    target = target or (lambda n: 2.0 ** (-n))
    bvals = rule.values(n_max)
    out = np.empty(n_max)
    for i, b in enumerate(bvals):
        n = i + 1
        tgt = target(n)
        if not tgt > 0:
            raise ValueError(f"target must be positive (n={n})")
        if cylindrical_term(m, b) <= tgt:
            out[i] = 1.0
            continue
        lo_log = 0.0
        for _ in range(4000):
            lo_log -= 1.0
            if cylindrical_term(m, math.exp(lo_log) * b) <= tgt:
                break
        else:
            raise RuntimeError(f"weight bisection did not bracket target at n={n}")
        hi_log = lo_log + 1.0
        for _ in range(200):
            if hi_log - lo_log <= rel_tol:
                break
            mid = 0.5 * (lo_log + hi_log)
            if cylindrical_term(m, math.exp(mid) * b) <= tgt:
                lo_log = mid
            else:
                hi_log = mid
        else:
            raise RuntimeError(f"weight bisection did not converge at n={n}")
        out[i] = math.exp(lo_log)
    return out
