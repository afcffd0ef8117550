"""Lebesgue norms on the grid, time-weighted sup norms and the Beta integral."""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np
from scipy.special import roots_legendre

from .fields import Grid2D, ScalarField, VectorField

__all__ = ["NormSeries", "lp_norm", "pointwise_magnitude", "weighted_sup_norm", "beta_int"]


@dataclass(frozen=True)
class NormSeries:
    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("norm values must be finite and nonnegative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size


def pointwise_magnitude(values: np.ndarray) -> np.ndarray:
    """Euclidean (Frobenius) magnitude over all leading component axes."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 2:
        return np.abs(v)
    comps = v.reshape(-1, *v.shape[-2:])
    return np.sqrt(np.einsum("c...,c...->...", comps, comps))


def lp_norm(f, p: float, weight=None, grid: Grid2D | None = None) -> float:
    """Discrete L^p norm ``(h^2 sum w |f|^p)^(1/p)``; ``p=inf`` gives the node maximum.

    ``f`` may be a ScalarField, VectorField, or a raw array of shape
    (..., N, N) together with ``grid``.  ``weight`` is a positive density
    (array or ScalarField) and is ignored for ``p=inf``.
    """
    if isinstance(f, (ScalarField, VectorField)):
        grid = f.grid
        f = f.values
    if grid is None:
        raise ValueError("a grid is required for raw arrays")
    if not p >= 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p}")
    mag = pointwise_magnitude(f)
    if np.isinf(p):
        return float(mag.max())
    if weight is not None:
        w = weight.values if isinstance(weight, ScalarField) else np.asarray(weight, dtype=float)
        if np.any(w <= 0):
            raise ValueError("weight must be strictly positive")
    else:
        w = 1.0
    if p == 2:
        s = np.sum(w * mag * mag)
    elif p == 1:
        s = np.sum(w * mag)
    else:
        s = np.sum(w * mag**p)
    return float((s * grid.cell_area) ** (1.0 / p))


def weighted_sup_norm(s: NormSeries, alpha: float) -> float:
    """max_t t^alpha * value over the samples of the series."""
    if len(s) == 0:
        raise ValueError("empty norm series")
    return float(np.max(s.times**alpha * s.values))


_GL_NODES = 80


def _half_integral(a: float, b: float) -> float:
    # int_0^{1/2} (1-t)^{-a} t^{-b} dt via t = u^m, m(1-b) - 1 = p integer,
    # so the endpoint singularity becomes the smooth factor m u^p.
    p = max(0, ceil(8.0 * (1.0 - b)) - 1)
    m = (p + 1) / (1.0 - b)
    umax = 0.5 ** (1.0 / m)
    x, w = roots_legendre(_GL_NODES)
    u = 0.5 * umax * (x + 1.0)
    vals = m * u**p * (1.0 - u**m) ** (-a)
    return float(0.5 * umax * np.dot(w, vals))


def beta_int(alpha: float, beta: float) -> float:
    """B(alpha, beta) = int_0^1 (1 - t)^(-alpha) t^(-beta) dt.

    Exponents enter with a minus sign, so this equals the classical
    Beta function evaluated at (1 - beta, 1 - alpha).  Both exponents must be
    below 1 for the integral to converge.
    """
    if not (alpha < 1 and beta < 1):
        raise ValueError(f"Beta integral diverges for alpha={alpha}, beta={beta}")
    return _half_integral(alpha, beta) + _half_integral(beta, alpha)
