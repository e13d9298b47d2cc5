import numpy as np
import pytest

from deletion_channel.states import DensityMatrix

ALPHA_GRID = tuple(round(0.01 * k, 2) for k in range(1, 100))
M1_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def alpha_grid():
    return ALPHA_GRID


@pytest.fixture
def m1_grid():
    return M1_GRID


@pytest.fixture
def make_density(rng):
    """Factory for random two-qubit density matrices (Ginibre ensemble)."""

    def make(rank=4):
        g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
        rho = g @ g.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        return DensityMatrix(rho / np.trace(rho).real)

    return make
