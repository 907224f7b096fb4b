import numpy as np
import pytest

from windmpc import MpcWeights, TurbineParams


@pytest.fixture(scope="session")
def params():
    return TurbineParams()


@pytest.fixture(scope="session")
def weights():
    return MpcWeights()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
