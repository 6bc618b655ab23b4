import numpy as np
import pytest

from amcpricer import ModelParams, simulate_paths


@pytest.fixture
def params():
    """Default model: s0=100, r=5%, q=0, sigma=30%, T=0.2, N=50."""
    return ModelParams()


@pytest.fixture
def short_params():
    """Coarse five-date grid for hand-checkable cases."""
    return ModelParams(N=5)


@pytest.fixture
def small_batch(params):
    return simulate_paths(params, 512, seed=123)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
