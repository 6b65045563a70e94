import numpy as np
import pytest

from indirect_erm import (
    Grid,
    LossSpec,
    dirac_noise,
    laplace_noise,
    make_margin_scenario,
)


@pytest.fixture(scope="session")
def grid():
    return Grid(points_per_dim=1024)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(points_per_dim=256)


@pytest.fixture(scope="session")
def hard_loss():
    return LossSpec("hard")


@pytest.fixture(scope="session")
def linear_scenario(grid):
    return make_margin_scenario(1, laplace_noise(2.0), grid=grid)


@pytest.fixture(scope="session")
def linear_dirac_scenario(grid):
    return make_margin_scenario(1, dirac_noise(), grid=grid)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
