import numpy as np
import pytest

from freerep import generate, systems


@pytest.fixture(scope="session")
def s0():
    return generate.s0_system()


@pytest.fixture(scope="session")
def s0_norm():
    return systems.normalize(generate.s0_system())


def rng_for(seed):
    return np.random.default_rng(seed)
