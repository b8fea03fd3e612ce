import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from schwz import Poly

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_poly(rng, degree, scale=1.0):
    c = scale * (rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1))
    c[-1] = c[-1] if abs(c[-1]) > 0.3 else 1.0
    return Poly(c)


@pytest.fixture
def quad6():
    return Poly([-6, 0, 1])


@pytest.fixture
def square():
    return Poly([0, 0, 1])
