import numpy as np
import pytest

from stencilforge.alphabet import builtin_targets
from stencilforge.core import GridSpec
from stencilforge.raster import RenderSettings


@pytest.fixture(scope="session")
def grid():
    return GridSpec(10)


@pytest.fixture(scope="session")
def settings():
    return RenderSettings()


@pytest.fixture(scope="session")
def alphabet(settings):
    return builtin_targets(settings)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
