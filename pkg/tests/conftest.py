import random

import pytest

from qswitch.digraph import ConnectionMap

# Eight-port queue: P2 -> P4 -> P3 -> P7 -> P5 -> P6 -> P0 -> P1.
QUEUE_ORDER = [2, 4, 3, 7, 5, 6, 0, 1]
TREE_EDGES = [(1, 3), (1, 6), (6, 4), (3, 5), (3, 7), (4, 0), (4, 2)]
UNICAST_EDGES = [(0, 1), (1, 2), (3, 4), (4, 6), (6, 7), (7, 5), (5, 3)]
MULTICAST_EDGES = [(0, 1), (1, 4), (1, 3), (3, 5), (5, 2), (3, 6), (6, 7)]


def chain_edges(order, close=False):
    edges = list(zip(order, order[1:]))
    if close:
        edges.append((order[-1], order[0]))
    return edges


@pytest.fixture
def queue_map():
    return ConnectionMap.from_edges(8, chain_edges(QUEUE_ORDER))


@pytest.fixture
def closed_queue_map():
    return ConnectionMap.from_edges(8, chain_edges(QUEUE_ORDER, close=True))


@pytest.fixture
def tree_map():
    return ConnectionMap.from_edges(8, TREE_EDGES)


@pytest.fixture
def unicast_map():
    return ConnectionMap.from_edges(8, UNICAST_EDGES)


@pytest.fixture
def multicast_map():
    return ConnectionMap.from_edges(8, MULTICAST_EDGES)


@pytest.fixture
def rng():
    return random.Random(20240517)


def expected_outlets(edges, n, inlet_bits):
    """Reference delivery: outlet v gets its predecessor's bit, else 0."""
    out = [0] * n
    for u, v in edges:
        out[v] = inlet_bits[u]
    return out
