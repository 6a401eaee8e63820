import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from candidate_graph import build_candidate_graph  # noqa: E402
from model import Instance, catalog_from_pairs  # noqa: E402


def make_instance(substations, turbines, cables=((2, 1.0),), **kwargs) -> Instance:
    return Instance(substations=substations, turbines=turbines, catalog=catalog_from_pairs(cables), **kwargs)


@pytest.fixture
def chain_instance():
    # Substation 1 at the origin, turbines 2 and 3 due north at 1 km and 2 km.
    return make_instance([(0.0, 0.0)], [(0.0, 1000.0), (0.0, 2000.0)], name='chain')


@pytest.fixture
def chain_graph(chain_instance):
    return build_candidate_graph(chain_instance)


@pytest.fixture
def offset_pair_instance():
    # Two turbines 100 m apart, both about 1 km from the substation: the star is not optimal.
    return make_instance([(0.0, 0.0)], [(0.0, 1000.0), (100.0, 1000.0)], name='offset_pair')


@pytest.fixture
def blocked_instance():
    """
    Q = 2 forest whose only crossing (1-4 against 2-3) has no feasible swap.
    """
    coordinates = [(-1, 2), (1, 2), (0, 4), (0, 5), (0.2, 0.8), (0.9, 0.6)]
    return make_instance([(0.0, 0.0)], [(1000.0 * x, 1000.0 * y) for x, y in coordinates],
                         neighbor_truncation=5, name='blocked')


@pytest.fixture
def square_instance():
    # Four turbines on a square around a central substation, three cable types.
    turbines = [(-1000.0, -1000.0), (1000.0, -1000.0), (1000.0, 1000.0), (-1000.0, 1000.0)]
    return make_instance([(0.0, 0.0)], turbines, cables=((1, 1.0), (2, 1.5), (4, 2.5)), name='square')
