import numpy as np
import pytest

from tempocomp import experiments as ex
from tempocomp.engine import EngineConfig
from tempocomp.errors import DataError
from tempocomp.nn import Engine


@pytest.fixture(scope="session")
def quiet_engine():
    return Engine.calibrated(EngineConfig().noiseless())


@pytest.fixture(scope="session")
def noisy_engine():
    return Engine.calibrated(EngineConfig())


@pytest.fixture(scope="session")
def mnist_test():
    try:
        return ex.mnist_test_subset(100, 0)
    except DataError as exc:
        pytest.skip(str(exc))


@pytest.fixture(scope="session")
def mnist_model(mnist_test):
    return ex.train_mnist()


@pytest.fixture(scope="session")
def detector(mnist_test):
    return ex.train_detector()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
