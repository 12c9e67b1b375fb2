import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import QUEUE_ORDER, TREE_EDGES, chain_edges
from qswitch.digraph import (
    IDLE,
    ConnectionDigraph,
    ConnectionMap,
    ConnectionMapError,
    Kind,
    Rule,
    UnclassifiableError,
    build_digraph,
    classify,
    decompose,
    normalize_cycle,
    random_connection_map,
    validate,
)


def test_validate_swap():
    assert validate(ConnectionMap.from_dict(2, {0: {1}, 1: {0}})) == []


def test_validate_contention():
    cmap = ConnectionMap.from_dict(3, {0: {2}, 1: {2}}, strict=False)
    (v,) = validate(cmap)
    assert v.rule is Rule.OUTPUT_CONTENTION and v.port == 2


def test_validate_queue(queue_map):
    assert validate(queue_map) == []


def test_validate_out_of_range_and_empty():
    cmap = ConnectionMap(3, (frozenset({5}), frozenset(), IDLE))
    rules = {(v.rule, v.port) for v in validate(cmap)}
    assert rules == {(Rule.OUT_OF_RANGE, 5), (Rule.EMPTY_DEST_SET, 1)}


def test_strict_construction_fails_fast():
    with pytest.raises(ConnectionMapError) as exc:
        ConnectionMap.from_dict(3, {0: {2}, 1: {2}})
    assert exc.value.violations[0].port == 2


def test_idle_is_not_an_empty_set():
    cmap = ConnectionMap.from_dict(2, {0: {1}})
    assert cmap.dests[1] is IDLE
    assert cmap.is_idle(1) and not cmap.is_idle(0)


def test_build_digraph_loopback():
    g = build_digraph(ConnectionMap.from_dict(1, {0: {0}}))
    assert g.edges == {(0, 0)}


def test_build_digraph_queue_and_closed_queue(queue_map, closed_queue_map):
    assert build_digraph(queue_map).edges == set(chain_edges(QUEUE_ORDER))
    assert len(build_digraph(queue_map).edges) == 7
    assert len(build_digraph(closed_queue_map).edges) == 8


def test_build_digraph_rejects_invalid():
    with pytest.raises(ConnectionMapError):
        build_digraph(ConnectionMap.from_dict(3, {0: {2}, 1: {2}}, strict=False))


def test_digraph_rejects_two_predecessors():
    with pytest.raises(ConnectionMapError):
        ConnectionDigraph.from_edges(3, [(0, 2), (1, 2)])


def test_decompose_empty():
    parts = decompose(ConnectionDigraph.from_edges(4, []))
    assert [p.kind for p in parts] == [Kind.NULL_NODE] * 4


def test_decompose_queue(queue_map):
    (q,) = decompose(build_digraph(queue_map))
    assert q.kind is Kind.QUEUE
    assert list(q.nodes) == QUEUE_ORDER
    assert (q.head, q.tail) == (2, 1)


def test_decompose_closed_queue(closed_queue_map):
    (c,) = decompose(build_digraph(closed_queue_map))
    assert c.kind is Kind.CYCLE
    # (P2,P4,P3,P7,P5,P6,P0,P1) rotated to start at P0
    assert c.cycle == (0, 1, 2, 4, 3, 7, 5, 6)


def test_decompose_tree():
    (t,) = decompose(ConnectionDigraph.from_edges(8, TREE_EDGES))
    assert t.kind is Kind.TREE
    assert t.root == 1
    assert len(t.nodes) == 8
    assert t.leaves == [0, 2, 5, 7]
    assert t.children[1] == [3, 6]


def test_decompose_unicast(unicast_map):
    parts = decompose(build_digraph(unicast_map))
    assert [(p.kind, p.nodes) for p in parts] == [
        (Kind.QUEUE, (0, 1, 2)),
        (Kind.CYCLE, (3, 4, 6, 7, 5)),
    ]


@pytest.mark.parametrize(
    "nodes, edges, kind",
    [
        ([0], [], Kind.NULL_NODE),
        ([0], [(0, 0)], Kind.LOOPBACK),
        ([0, 1], [(0, 1)], Kind.QUEUE),
        ([0, 1], [(0, 1), (1, 0)], Kind.CYCLE),
        ([0, 1, 2], [(0, 1), (0, 2)], Kind.TREE),
        ([0, 1, 2], [(0, 1), (1, 0), (1, 2)], Kind.FOREST),
        # self-loop with an attachment: the loopback is the forest's cycle
        ([0, 1], [(0, 0), (0, 1)], Kind.FOREST),
    ],
)
def test_classify_minimal_witnesses(nodes, edges, kind):
    assert classify(nodes, edges).kind is kind


def test_classify_forest_finds_its_cycle():
    # cycle (4,1,3,6) with attachments hanging off 3 and 4
    edges = [(4, 1), (1, 3), (3, 6), (6, 4), (3, 5), (3, 7), (4, 2), (2, 0)]
    f = classify(range(8), edges)
    assert f.kind is Kind.FOREST
    assert f.cycle == (1, 3, 6, 4)
    assert f.attachments == [(3, 5), (3, 7), (4, 2)]


def test_classify_rejects_two_predecessors():
    with pytest.raises(UnclassifiableError):
        classify([0, 1, 2], [(0, 2), (1, 2)])


def test_forest_with_shared_outlet_is_rejected():
    # P6 would have two predecessors (P3 in the cycle, P4 in an attachment).
    edges = [(4, 1), (1, 3), (3, 6), (6, 4), (3, 5), (3, 7), (4, 2), (4, 6)]
    cmap = ConnectionMap.from_edges(8, edges, strict=False)
    assert any(v.rule is Rule.OUTPUT_CONTENTION and v.port == 6 for v in validate(cmap))


def test_normalize_cycle():
    assert normalize_cycle((5, 3, 9)) == (3, 9, 5)


def _edges_of(parts):
    return set().union(*(p.edges for p in parts)) if parts else set()


def _random_maps(count, max_n, unicast, seed):
    r = random.Random(seed)
    for _ in range(count):
        n = r.randint(1, max_n)
        yield random_connection_map(n, r, unicast=unicast)


@pytest.mark.parametrize("unicast", [False, True])
def test_decompose_partitions_and_round_trips(unicast):
    for cmap in _random_maps(1000, 32, unicast, seed=7 + unicast):
        g = build_digraph(cmap)
        parts = decompose(g)
        nodes = [v for p in parts for v in p.nodes]
        assert sorted(nodes) == list(range(cmap.n))
        assert _edges_of(parts) == g.edges
        if unicast:
            assert {p.kind for p in parts} <= {Kind.NULL_NODE, Kind.LOOPBACK, Kind.QUEUE, Kind.CYCLE}


def _degree_check(sub):
    """Re-derive the kind from the definitions' degree clauses."""
    indeg, outdeg = sub.in_degree, sub.out_degree
    n = len(sub.nodes)
    if n == 1:
        return Kind.LOOPBACK if sub.edges else Kind.NULL_NODE
    heads = [v for v in sub.nodes if indeg[v] == 0]
    tails = [v for v in sub.nodes if outdeg[v] == 0]
    if len(heads) == 1 and len(tails) == 1 and all(outdeg[v] == 1 for v in sub.nodes if v not in tails):
        return Kind.QUEUE
    if all(indeg[v] == 1 and outdeg[v] == 1 for v in sub.nodes):
        return Kind.CYCLE
    if len(heads) == 1:
        return Kind.TREE
    return Kind.FOREST


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=24), st.integers(min_value=0, max_value=2**32), st.booleans())
def test_classification_matches_degree_clauses(n, seed, unicast):
    cmap = random_connection_map(n, random.Random(seed), unicast=unicast)
    for sub in decompose(build_digraph(cmap)):
        assert sub.kind is _degree_check(sub)
        if sub.kind in (Kind.CYCLE, Kind.FOREST):
            assert sub.cycle[0] == min(sub.cycle)
