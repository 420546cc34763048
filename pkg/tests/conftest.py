import numpy as np
import pytest

from permbounds.ensembles import ds_random


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def ds6(rng):
    """A generic random doubly stochastic 6x6 matrix."""
    return ds_random(6, rng)
