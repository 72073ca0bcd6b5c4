import numpy as np
import pytest

from utils.geometry import make_domain


@pytest.fixture
def domain2d():
    return make_domain(1.0, 0.7, 0.5)


@pytest.fixture
def domain3d():
    return make_domain(1.0, 0.5, 0.5, 0.5, dimension=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def _random_domain(rng, dimension):
    L = rng.uniform(1.0, 3.0)
    a = rng.uniform(0.2, 0.85) * L
    b = rng.uniform(0.3, 1.0) * a
    c = rng.uniform(0.3, 1.0) * b if dimension == 3 else None
    return make_domain(L, a, b, c, dimension)


@pytest.fixture
def random_domain():
    """Factory of random admissible domains: random_domain(rng, dimension)."""
    return _random_domain
