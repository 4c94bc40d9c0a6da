import pytest

from cfl.generators import gen_complete, gen_paley, gen_random_regular
from cfl.graphs import from_edge_list, uniform_weights


@pytest.fixture(scope="session")
def petersen():
    edges = []
    for i in range(5):
        edges.append((i, (i + 1) % 5))
        edges.append((5 + i, 5 + (i + 2) % 5))
        edges.append((i, 5 + i))
    return from_edge_list(10, edges)


@pytest.fixture(scope="session")
def k6():
    return gen_complete(6)


@pytest.fixture(scope="session")
def k6_unit(k6):
    return uniform_weights(k6)


@pytest.fixture(scope="session")
def paley13():
    return gen_paley(13)


@pytest.fixture(scope="session")
def rr_20_6():
    return gen_random_regular(20, 6, 101)
