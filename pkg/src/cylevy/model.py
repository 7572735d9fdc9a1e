"""Diagonal model data: decay rates ``gamma_n``, noise weights ``beta_n``.

Also the Dirichlet Laplacian on ``[0, pi]^d``: its spectrum in a canonical
linear order, its eigenfunctions and reconstruction of a field from mode
coordinates.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special

__all__ = [
    "ModeIndex",
    "PowerBeta",
    "GeometricBeta",
    "ExplicitBeta",
    "PowerGamma",
    "LogGamma",
    "LaplacianGamma",
    "ExplicitGamma",
    "Spectrum",
    "laplacian_spectrum",
    "eigenfunction_eval",
    "field_eval",
    "basis_matrix",
    "grid_points",
    "beta_from_record",
    "spectrum_from_record",
]


@dataclass(frozen=True)
class ModeIndex:
    n: int
    multi: Tuple[int, ...]


# -- noise weights ---------------------------------------------------------


@dataclass(frozen=True)
class PowerBeta:
    """``beta_n = c * n**(-p)``; ``p`` may be negative (growing weights)."""

    c: float = 1.0
    p: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("beta coefficient must be positive")

    def values(self, N: int) -> np.ndarray:
        return self.c * np.arange(1, N + 1, dtype=float) ** (-self.p)

    def at(self, n):
        return self.c * np.asarray(n, dtype=float) ** (-self.p)

    @property
    def bounded(self) -> bool:
        return self.p >= 0

    @property
    def nonincreasing(self) -> bool:
        return self.p >= 0

    def power_form(self, a: float):
        """``(coef, q)`` with ``beta_n**a = coef * n**(-q)``."""
        return self.c ** a, self.p * a


@dataclass(frozen=True)
class GeometricBeta:
    """``beta_n = c * r**n`` with ``0 < r``."""

    c: float = 1.0
    r: float = 0.5

    def __post_init__(self):
        if not (self.c > 0 and self.r > 0):
            raise ValueError("geometric weights need c > 0 and r > 0")

    def values(self, N: int) -> np.ndarray:
        return self.c * self.r ** np.arange(1, N + 1, dtype=float)

    def at(self, n):
        return self.c * self.r ** np.asarray(n, dtype=float)

    @property
    def bounded(self) -> bool:
        return self.r <= 1

    @property
    def nonincreasing(self) -> bool:
        return self.r <= 1

    def power_form(self, a):
        return None


@dataclass(frozen=True)
class ExplicitBeta:
    """A finite list of weights; nothing is known beyond its length."""

    vals: Tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(x) for x in self.vals)
        if not v or min(v) <= 0:
            raise ValueError("explicit weights must be positive")
        object.__setattr__(self, "vals", v)

    def values(self, N: int) -> np.ndarray:
        if N > len(self.vals):
            raise ValueError(f"only {len(self.vals)} explicit weights available")
        return np.array(self.vals[:N])

    def at(self, n):
        return np.array(self.vals)[np.asarray(n, dtype=int) - 1]

    @property
    def bounded(self) -> bool:
        return True

    @property
    def nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.vals) <= 0))

    def power_form(self, a):
        return None


# -- decay rates -----------------------------------------------------------


@dataclass(frozen=True)
class PowerGamma:
    """``gamma_n = c * n**p`` with ``c, p > 0``."""

    c: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if not (self.c > 0 and self.p > 0):
            raise ValueError("gamma power law needs c > 0 and p > 0")

    def values(self, N: int) -> np.ndarray:
        return self.c * np.arange(1, N + 1, dtype=float) ** self.p

    def power_bounds(self):
        """``(c_lo, c_hi, e)`` with ``c_lo n**e <= gamma_n <= c_hi n**e``."""
        return self.c, self.c, self.p


@dataclass(frozen=True)
class LogGamma:
    """``gamma_n = log(n + 1)``."""

    def values(self, N: int) -> np.ndarray:
        return np.log1p(np.arange(1, N + 1, dtype=float))

    def power_bounds(self):
        return None


@dataclass(frozen=True)
class LaplacianGamma:
    """Dirichlet Laplacian eigenvalues on ``[0, pi]^d`` in canonical order."""

    d: int = 1

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("dimension must be a positive integer")

    def values(self, N: int) -> np.ndarray:
        return np.array([g for _, g in laplacian_spectrum(self.d, N)], dtype=float)

    def power_bounds(self):
        # lattice counting in the positive orthant:
        #   omega_d (sqrt(lam) - sqrt(d))^d / 2^d <= #{|j|^2 <= lam} <= omega_d lam^(d/2) / 2^d
        d = self.d
        omega = math.pi ** (d / 2) / special.gamma(d / 2 + 1)
        k = (2.0 ** d / omega) ** (1.0 / d)
        if d == 1:
            return 1.0, 1.0, 2.0
        return k * k, (k + math.sqrt(d)) ** 2, 2.0 / d


@dataclass(frozen=True)
class ExplicitGamma:
    vals: Tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(x) for x in self.vals)
        if not v or min(v) <= 0:
            raise ValueError("explicit decay rates must be positive")
        object.__setattr__(self, "vals", v)

    def values(self, N: int) -> np.ndarray:
        if N > len(self.vals):
            raise ValueError(f"only {len(self.vals)} explicit decay rates available")
        return np.array(self.vals[:N])

    def power_bounds(self):
        return None


@dataclass(frozen=True)
class Spectrum:
    """Decay rates and noise weights of the diagonal system."""

    gamma: object
    beta: object

    @classmethod
    def explicit(cls, gammas: Sequence[float], betas: Sequence[float]) -> "Spectrum":
        if len(gammas) != len(betas):
            raise ValueError("gammas and betas need equal length")
        return cls(ExplicitGamma(tuple(gammas)), ExplicitBeta(tuple(betas)))

    @classmethod
    def power_law(cls, c_gamma=1.0, p_gamma=2.0, c_beta=1.0, p_beta=0.0) -> "Spectrum":
        return cls(PowerGamma(c_gamma, p_gamma), PowerBeta(c_beta, p_beta))

    @classmethod
    def log_law(cls, beta=None) -> "Spectrum":
        return cls(LogGamma(), beta or PowerBeta())

    @classmethod
    def laplacian(cls, d: int = 1, beta=None) -> "Spectrum":
        return cls(LaplacianGamma(d), beta or PowerBeta())

    @property
    def size(self) -> Optional[int]:
        """Number of available modes, ``None`` when unbounded."""
        sizes = [len(r.vals) for r in (self.gamma, self.beta) if hasattr(r, "vals")]
        return min(sizes) if sizes else None

    def gammas(self, N: int) -> np.ndarray:
        return self.gamma.values(N)

    def betas(self, N: int) -> np.ndarray:
        return self.beta.values(N)

    @property
    def is_laplacian(self) -> bool:
        return isinstance(self.gamma, LaplacianGamma)


# -- Dirichlet Laplacian -----------------------------------------------------


@functools.lru_cache(maxsize=32)
def _laplacian_table(d: int, N: int):
    # grow the radius until the ball holds at least N multi-indices
    lam = max(d, 1) * 1.0
    while True:
        r = int(math.isqrt(int(lam)))
        axes = [np.arange(1, r + 1)] * d
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        vals = np.sum(grid * grid, axis=1)
        inside = vals <= lam
        if inside.sum() >= N:
            grid, vals = grid[inside], vals[inside]
            break
        lam *= 2.0
    # sort by eigenvalue, then lexicographically on the multi-index
    keys = [grid[:, i] for i in range(d - 1, -1, -1)] + [vals]
    order = np.lexsort(keys)[:N]
    return grid[order], vals[order]


def laplacian_spectrum(d: int, N: int):
    """The ``N`` smallest Dirichlet eigenvalues ``n_1^2 + ... + n_d^2``.

    Returns a list of ``(ModeIndex, gamma)`` sorted by eigenvalue with a
    lexicographic tie-break; repeated eigenvalues appear once per multi-index.
    """
    if d < 1 or N < 1:
        raise ValueError("need d >= 1 and N >= 1")
    grid, vals = _laplacian_table(int(d), int(N))
    return [(ModeIndex(i + 1, tuple(int(k) for k in g)), int(v))
            for i, (g, v) in enumerate(zip(grid, vals))]


def _sin_dirichlet(n, xi):
    s = np.sin(n * xi)
    # exact zeros on the boundary of [0, pi]
    return np.where((xi == 0.0) | (xi == np.pi), 0.0, s)


def eigenfunction_eval(d: int, multi: Sequence[int], points) -> np.ndarray:
    """``(2/pi)^(d/2) prod_i sin(n_i xi_i)`` at ``points`` of shape ``(..., d)``."""
    pts = np.asarray(points, dtype=float)
    if d == 1 and pts.ndim <= 1:
        pts = pts[..., None]
    if pts.shape[-1] != d or len(multi) != d:
        raise ValueError("dimension mismatch")
    out = np.full(pts.shape[:-1], (2.0 / math.pi) ** (d / 2.0))
    for i, n in enumerate(multi):
        out = out * _sin_dirichlet(n, pts[..., i])
    return out if out.ndim else float(out)


def basis_matrix(d: int, N: int, points) -> np.ndarray:
    """Values of the first ``N`` eigenfunctions at ``points``; shape ``(P, N)``."""
    pts = np.asarray(points, dtype=float).reshape(-1, d)
    grid, _ = _laplacian_table(int(d), int(N))
    out = np.full((pts.shape[0], N), (2.0 / math.pi) ** (d / 2.0))
    for i in range(d):
        out *= _sin_dirichlet(grid[None, :, i], pts[:, i:i + 1])
    return out


def field_eval(coords, points, d: int = 1) -> np.ndarray:
    """``u(xi) = sum_n x_n e_n(xi)`` for the truncated expansion ``coords``."""
    x = np.asarray(coords, dtype=float)
    pts = np.asarray(points, dtype=float).reshape(-1, d)
    if x.size == 0:
        return np.zeros(pts.shape[0])
    return basis_matrix(d, x.shape[-1], pts) @ x.T if x.ndim > 1 else basis_matrix(d, x.size, pts) @ x


def grid_points(d: int, n: int) -> np.ndarray:
    """Tensor grid of ``n`` points per axis on ``[0, pi]^d`` including the boundary."""
    ax = np.linspace(0.0, math.pi, n)
    ax[-1] = math.pi
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, d)


def beta_from_record(rec: dict):
    kind = rec.get("type", "power")
    if kind == "power":
        return PowerBeta(float(rec.get("c", 1.0)), float(rec.get("p", 0.0)))
    if kind == "geometric":
        return GeometricBeta(float(rec.get("c", 1.0)), float(rec["r"]))
    if kind == "explicit":
        return ExplicitBeta(tuple(rec["values"]))
    raise ValueError(f"unknown beta rule {kind!r}")


def spectrum_from_record(rec: dict) -> Spectrum:
    """Build a :class:`Spectrum` from ``{"spectrum": {...}, "beta": {...}}``."""
    sp = rec["spectrum"]
    beta = beta_from_record(rec.get("beta", {"type": "power"}))
    kind = sp.get("type")
    if kind == "laplacian":
        return Spectrum(LaplacianGamma(int(sp.get("d", 1))), beta)
    if kind == "power":
        return Spectrum(PowerGamma(float(sp.get("c", 1.0)), float(sp.get("p", 2.0))), beta)
    if kind == "log":
        return Spectrum(LogGamma(), beta)
    if kind == "explicit":
        return Spectrum(ExplicitGamma(tuple(sp["gammas"])), beta)
    raise ValueError(f"unknown spectrum type {kind!r}")
