import numpy as np
import pytest

from fsilab.fields import VectorField, ifft2, make_grid


def smooth_random_field(grid, seed, kmax=6, solenoidal=False):
    """Random trigonometric field with modes |k| <= kmax (in units of 2 pi / L)."""
    rng = np.random.default_rng(seed)
    vh = np.zeros((2, grid.N, grid.N // 2 + 1), dtype=complex)
    vh[:, :kmax + 1, :kmax + 1] = rng.normal(size=(2, kmax + 1, kmax + 1)) + 1j * rng.normal(size=(2, kmax + 1, kmax + 1))
    vh[:, -kmax:, :kmax + 1] = rng.normal(size=(2, kmax, kmax + 1)) + 1j * rng.normal(size=(2, kmax, kmax + 1))
    v = VectorField(grid, ifft2(vh, grid) * grid.N)
    if solenoidal:
        from fsilab.fields import leray_project

        v = leray_project(v)
    return v


@pytest.fixture
def grid64():
    return make_grid(8.0, 64)


@pytest.fixture
def grid128():
    return make_grid(8.0, 128)
