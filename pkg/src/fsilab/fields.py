"""Periodic grids, sampled fields and spectral operators.

The whole plane is replaced by the periodic square [-L/2, L/2)^2.  All
derivatives are pseudo-spectral (``scipy.fft`` real transforms); the odd
derivative of the Nyquist mode is set to zero so that every operator here
(divergence, gradient, Leray projector) uses one consistent wavenumber table.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid2D",
    "ScalarField",
    "VectorField",
    "make_grid",
    "fft2",
    "ifft2",
    "leray_project",
    "divergence",
    "deformation",
    "gradient",
    "curl",
    "perp_gradient",
    "spectral_interpolate",
]


@dataclass(frozen=True)
class Grid2D:
    """Uniform N x N grid on the periodic square of side ``L``."""

    L: float
    N: int

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"grid side length must be positive, got L={self.L}")
        if int(self.N) != self.N or self.N % 2:
            raise ValueError(f"grid size must be an even integer, got N={self.N}")
        if self.N < 16:
            raise ValueError(f"grid size must be at least 16, got N={self.N}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L / 2 + self.h * np.arange(self.N)

    @cached_property
    def XY(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.x, self.x, indexing="ij"))

    @property
    def X(self) -> np.ndarray:
        return self.XY[0]

    @property
    def Y(self) -> np.ndarray:
        return self.XY[1]

    @cached_property
    def _k(self):
        n = self.N
        kx = 2 * np.pi * sfft.fftfreq(n, d=self.h)
        ky = 2 * np.pi * sfft.rfftfreq(n, d=self.h)
        kxd = kx.copy()
        kxd[n // 2] = 0.0
        kyd = ky.copy()
        kyd[-1] = 0.0
        KX, KY = np.meshgrid(kx, ky, indexing="ij")
        KXd, KYd = np.meshgrid(kxd, kyd, indexing="ij")
        return KX, KY, KXd, KYd

    @property
    def kx(self) -> np.ndarray:
        """Derivative wavenumbers (Nyquist zeroed), rfft layout."""
        return self._k[2]

    @property
    def ky(self) -> np.ndarray:
        return self._k[3]

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 including the Nyquist modes; used for diffusion."""
        KX, KY = self._k[0], self._k[1]
        return KX**2 + KY**2

    @cached_property
    def kd2(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def _kd2_safe(self) -> np.ndarray:
        return np.where(self.kd2 == 0, 1.0, self.kd2)

    @cached_property
    def dealias(self) -> np.ndarray:
        """Two-thirds rule mask in rfft layout."""
        n = self.N
        ix = np.abs(sfft.fftfreq(n, d=1.0 / n))
        iy = sfft.rfftfreq(n, d=1.0 / n)
        cut = n / 3.0
        return (ix[:, None] < cut) & (iy[None, :] < cut)

    def wrap(self, p) -> np.ndarray:
        """Wrap a point into the fundamental square."""
        p = np.asarray(p, dtype=float)
        return (p + self.L / 2) % self.L - self.L / 2

    def offsets(self, center) -> tuple[np.ndarray, np.ndarray]:
        """Minimal-image displacement x - center at every node."""
        cx, cy = np.asarray(center, dtype=float)
        half = self.L / 2
        dx = (self.X - cx + half) % self.L - half
        dy = (self.Y - cy + half) % self.L - half
        return dx, dy


def make_grid(L: float, N: int) -> Grid2D:
    return Grid2D(float(L), int(N))


def fft2(a: np.ndarray) -> np.ndarray:
    return sfft.rfft2(a, axes=(-2, -1))


def ifft2(a: np.ndarray, grid: Grid2D) -> np.ndarray:
    return sfft.irfft2(a, s=(grid.N, grid.N), axes=(-2, -1))


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise ValueError("field contains non-finite values")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N, self.grid.N):
            raise ValueError(f"scalar field shape {v.shape} does not match grid N={self.grid.N}")
        _check_finite(v)
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _vals(other))

    def __mul__(self, a):
        return ScalarField(self.grid, self.values * a)

    __rmul__ = __mul__

    def mean(self) -> float:
        return float(self.values.mean())

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid2D
    values: np.ndarray = field(repr=False)
    solenoidal: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2, self.grid.N, self.grid.N):
            raise ValueError(f"vector field shape {v.shape} does not match (2, N, N) with N={self.grid.N}")
        _check_finite(v)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "VectorField":
        return cls(grid, np.zeros((2, grid.N, grid.N)), solenoidal=True)

    def __add__(self, other):
        return VectorField(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return VectorField(self.grid, self.values - _vals(other))

    def __mul__(self, a):
        return VectorField(self.grid, self.values * a, solenoidal=self.solenoidal)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.values[0] ** 2 + self.values[1] ** 2)

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=(-2, -1))


def _vals(f):
    return f.values if isinstance(f, (ScalarField, VectorField)) else f


def leray_project(v: VectorField) -> VectorField:
    """L2-orthogonal projection onto divergence-free fields; the mean is kept."""
    g = v.grid
    vh = fft2(v.values)
    return VectorField(g, ifft2(_leray_hat(vh, g), g), solenoidal=True)


def _leray_hat(vh: np.ndarray, g: Grid2D) -> np.ndarray:
    # works on (..., 2, N, N//2+1)
    kx, ky = g.kx, g.ky
    d = (kx * vh[..., 0, :, :] + ky * vh[..., 1, :, :]) / g._kd2_safe
    out = np.empty_like(vh)
    out[..., 0, :, :] = vh[..., 0, :, :] - kx * d
    out[..., 1, :, :] = vh[..., 1, :, :] - ky * d
    return out


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    vh = fft2(v.values)
    return ScalarField(g, ifft2(1j * (g.kx * vh[0] + g.ky * vh[1]), g))


def gradient(f: ScalarField) -> VectorField:
    g = f.grid
    fh = fft2(f.values)
    return VectorField(g, ifft2(np.stack([1j * g.kx * fh, 1j * g.ky * fh]), g))


def perp_gradient(psi: ScalarField) -> VectorField:
    """(-d_y psi, d_x psi); exactly divergence free in the discrete sense."""
    g = psi.grid
    ph = fft2(psi.values)
    return VectorField(g, ifft2(np.stack([-1j * g.ky * ph, 1j * g.kx * ph]), g), solenoidal=True)


def curl(v: VectorField) -> ScalarField:
    g = v.grid
    vh = fft2(v.values)
    return ScalarField(g, ifft2(1j * (g.kx * vh[1] - g.ky * vh[0]), g))


def velocity_gradient(v: VectorField) -> np.ndarray:
    """Array G[i, j] = d_j v_i, shape (2, 2, N, N)."""
    g = v.grid
    vh = fft2(v.values)
    k = (g.kx, g.ky)
    return ifft2(np.stack([np.stack([1j * k[j] * vh[i] for j in range(2)]) for i in range(2)]), g)


def deformation(v: VectorField) -> np.ndarray:
    """Symmetric part of the velocity gradient, shape (2, 2, N, N)."""
    G = velocity_gradient(v)
    return 0.5 * (G + G.transpose(1, 0, 2, 3))


def spectral_interpolate(values: np.ndarray, grid: Grid2D, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of grid samples at arbitrary points.

    ``values`` has shape (..., N, N); ``points`` has shape (P, 2).  Cost is
    O(P N^2), meant for a few hundred points.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = grid.N
    vh = sfft.fft2(values, axes=(-2, -1)) / (n * n)
    m = sfft.fftfreq(n, d=1.0 / n)
    m[n // 2] = 0.0  # Nyquist: cosine only, handled by symmetric split below
    kx = 2 * np.pi * m / grid.L
    # phase measured from the grid origin x_0 = -L/2
    px = pts[:, 0] + grid.L / 2
    py = pts[:, 1] + grid.L / 2
    ex = np.exp(1j * np.outer(px, kx))  # (P, N)
    ey = np.exp(1j * np.outer(py, kx))
    ny = n // 2
    # Nyquist rows/cols use cos(pi N x / L) so the interpolant stays real
    kn = np.pi * n / grid.L
    ex[:, ny] = np.cos(kn * px)
    ey[:, ny] = np.cos(kn * py)
    out = np.einsum("...ab,pa,pb->...p", vh, ex, ey)
    return out.real
