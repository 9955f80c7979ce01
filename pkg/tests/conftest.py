import numpy as np
import pytest

from zerodef.models import McKeithanParams, example_networks, mckeithan


@pytest.fixture(scope="session")
def nets():
    return example_networks()


@pytest.fixture(scope="session")
def assoc(nets):
    """P1 + P2 <-> P3 with unit rates; interior equilibrium (1,1,1)."""
    return nets["assoc"]


@pytest.fixture(scope="session")
def scalar_pump(nets):
    return nets["scalar_pump"]


@pytest.fixture(scope="session")
def linear_exchange(nets):
    return nets["linear_exchange"]


@pytest.fixture(scope="session")
def mck_unit():
    cache = {}

    def make(N):
        if N not in cache:
            cache[N] = mckeithan(McKeithanParams.unit(N))
        return cache[N]

    return make


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def random_mckeithan(N, rng, lo=0.1, hi=10.0):
    draw = lambda k: tuple(np.exp(rng.uniform(np.log(lo), np.log(hi), k)))
    return McKeithanParams(N, draw(1)[0], draw(N), draw(N + 1))
