import numpy as np
import pytest

from wstlspg.burgers_fom import Parameters, SpatialGrid, fom_march
from wstlspg.sweep import build_training_set

SMALL_GRID = SpatialGrid(50)
SMALL_STEPS = 64
TEST_MU = Parameters(4.0714, 0.0185)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_fom():
    """Burgers trajectory on the reduced problem (50 cells, 64 steps)."""
    return fom_march(TEST_MU, SMALL_GRID, 0.1, SMALL_STEPS)


@pytest.fixture(scope="session")
def small_training():
    """Four training trajectories on the reduced problem, plus the test point."""
    params = [Parameters(3.0, 0.014), Parameters(3.0, 0.02), Parameters(4.1, 0.014),
              Parameters(4.1, 0.02), TEST_MU]
    return build_training_set(params, SMALL_GRID, 0.1, SMALL_STEPS)
