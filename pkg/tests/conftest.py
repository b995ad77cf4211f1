import numpy as np
import pytest

from fracheston import TimeGrid, default_params


@pytest.fixture
def params():
    return default_params()


@pytest.fixture
def rough_params():
    return default_params(alpha=-0.75)


@pytest.fixture
def coarse_grid():
    return TimeGrid.from_horizon(1.0, 0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
