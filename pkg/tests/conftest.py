import numpy as np
import pytest

from normsol.fields import Field, canonicalize
from normsol.grids import ReducedGrid, SymmetryConfig, antisymmetrize, build_grid


def smooth_random_values(grid: ReducedGrid, rng, n_bumps: int = 6) -> np.ndarray:
    """Superposition of random Gaussian bumps, compactly inside the box."""
    mesh = grid.coordinate_mesh()
    v = np.zeros(grid.shape)
    for _ in range(n_bumps):
        c = rng.uniform(0.05 * grid.L, 0.7 * grid.L, size=grid.d)
        w = rng.uniform(0.05 * grid.L, 0.15 * grid.L)
        a = rng.normal()
        v += a * np.exp(-sum((mesh[i] - c[i]) ** 2 for i in range(grid.d)) / (2 * w * w))
    return canonicalize(grid, v)


def antisym_bump_pair(grid: ReducedGrid, c=None, width=None) -> Field:
    """Off-diagonal Gaussian pair, antisymmetrized."""
    mesh = grid.coordinate_mesh()
    c = c if c is not None else grid.L / 3.0
    width = width if width is not None else grid.L / 8.0
    centers = [c, c / 2.0] + [0.0] * (grid.d - 2)
    bump = np.exp(-sum((mesh[i] - centers[i]) ** 2 for i in range(grid.d)) / (2 * width ** 2))
    return Field(grid, antisymmetrize(grid, bump))


@pytest.fixture
def grid44():
    return build_grid(SymmetryConfig("x2", 4, 2), 64, 12.0)


@pytest.fixture
def grid44_fine():
    return build_grid(SymmetryConfig("x2", 4, 2), 128, 12.0)


@pytest.fixture
def rgrid4():
    return build_grid(SymmetryConfig("radial", 4), 128, 12.0)
