import numpy as np
import pytest

from speckleqi import SystemParams


@pytest.fixture
def fig2a():
    """First comparison point: N_S = 1e-4, M = 10^8.5, shared noise/tap values."""
    return SystemParams(M=10 ** 8.5, N_S=1e-4, N_B=20.0, kappa_bar=0.01, epsilon=0.01)


@pytest.fixture
def fig2b():
    """Second comparison point: N_S = 1e-2, M = 10^6.5 (same x as the first)."""
    return SystemParams(M=10 ** 6.5, N_S=1e-2, N_B=20.0, kappa_bar=0.01, epsilon=0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
