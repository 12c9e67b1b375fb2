import itertools
import random

import pytest

from qswitch.digraph import ConnectionMap
from qswitch.planner import plan
from qswitch.qcircuit import (
    Circuit,
    CircuitError,
    CnGate,
    Layer,
    compile_cycle,
    compile_fanout,
    compile_plan,
    compile_transposition,
    cycle_xy,
    format_circuit,
    parse_circuit,
    stats,
)


def swap_positions(state, pairs):
    """Oracle: apply disjoint swaps to a list holding one datum per qubit."""
    state = dict(state)
    for a, b in pairs:
        state[a], state[b] = state[b], state[a]
    return state


def xor_run(layers, bits):
    """Oracle: XOR semantics of CN gates written out independently."""
    bits = dict(bits)
    for layer in layers:
        for g in layer.gates:
            bits[g.target] = bits[g.target] ^ bits[g.control]
    return bits


def test_cn_gate_needs_distinct_qubits():
    with pytest.raises(CircuitError):
        CnGate(3, 3)


def test_layer_rejects_overlap():
    with pytest.raises(CircuitError):
        Layer.of([(0, 1), (1, 2)])


def test_circuit_rejects_out_of_range():
    with pytest.raises(CircuitError):
        Circuit(2, (Layer.of([(0, 2)]),))


def test_transposition_gates():
    layers = compile_transposition(4, 5)
    assert [layer.gates for layer in layers] == [(CnGate(4, 5),), (CnGate(5, 4),), (CnGate(4, 5),)]


@pytest.mark.parametrize("a, b, want", [(1, 0, (0, 1)), (1, 1, (1, 1)), (0, 1, (1, 0)), (0, 0, (0, 0))])
def test_transposition_swaps_bits(a, b, want):
    out = xor_run(compile_transposition(0, 1), {0: a, 1: b})
    assert (out[0], out[1]) == want


def test_transposition_rejects_self():
    with pytest.raises(CircuitError):
        compile_transposition(2, 2)


def test_cycle_xy_five():
    x, y = cycle_xy(range(5))
    assert x.pairs == ((2, 3), (1, 4))
    assert y.pairs == ((2, 4), (1, 0))


def test_cycle_xy_unicast():
    x, y = cycle_xy((3, 4, 6, 7, 5))
    assert x.pairs == ((6, 7), (4, 5))
    assert y.pairs == ((6, 5), (4, 3))


def test_cycle_xy_multicast():
    x, y = cycle_xy((0, 1, 3, 5, 2))
    assert set(x.pairs) == {(1, 2), (3, 5)}
    assert set(y.pairs) == {(1, 0), (3, 2)}


def test_cycle_xy_six():
    x, y = cycle_xy(range(6))
    assert x.pairs == ((2, 4), (1, 5))
    assert y.pairs == ((3, 4), (2, 5), (1, 0))


def test_cycle_xy_three():
    x, y = cycle_xy((0, 1, 2))
    assert x.pairs == ((1, 2),) and y.pairs == ((1, 0),)


def test_cycle_xy_rejects_short():
    with pytest.raises(CircuitError):
        cycle_xy((0, 1))


@pytest.mark.parametrize("length", range(3, 65))
def test_yx_equals_cycle(length):
    r = random.Random(length)
    ports = r.sample(range(200), length)
    x, y = cycle_xy(ports)
    data = {p: f"d{p}" for p in ports}
    got = swap_positions(swap_positions(data, x), y)
    want = {ports[(i + 1) % length]: f"d{p}" for i, p in enumerate(ports)}
    assert got == want
    flat = [q for pair in x.pairs + y.pairs for q in pair]
    assert set(flat) <= set(ports)


def test_compile_cycle_sizes():
    assert len(compile_cycle((7, 9))) == 3
    three = compile_cycle((0, 1, 2))
    assert len(three) == 6 and sum(len(layer) for layer in three) == 6
    five = compile_cycle(range(5))
    assert len(five) == 6 and sum(len(layer) for layer in five) == 12


def test_compile_cycle_rejects_trivial():
    with pytest.raises(CircuitError):
        compile_cycle((4,))


@pytest.mark.parametrize("length", range(2, 13))
def test_compiled_cycle_routes_every_basis_state(length):
    cycle = list(range(length))
    layers = compile_cycle(cycle)
    inputs = itertools.product((0, 1), repeat=length) if length <= 10 else (
        tuple(random.Random(s).getrandbits(1) for _ in range(length)) for s in range(300)
    )
    for bits in inputs:
        out = xor_run(layers, dict(enumerate(bits)))
        for i in range(length):
            assert out[(i + 1) % length] == bits[i]


@pytest.mark.parametrize("t", [1, 3, 7])
def test_fanout_depth(t):
    layers = compile_fanout(0, list(range(1, t + 1)))
    assert len(layers) == {1: 1, 3: 2, 7: 3}[t]


def test_fanout_three_targets_pattern():
    layers = compile_fanout(9, [1, 2, 3])
    assert [layer.gates for layer in layers] == [(CnGate(9, 1),), (CnGate(1, 3), CnGate(9, 2))]


def test_fanout_rejects_overlap():
    with pytest.raises(CircuitError):
        compile_fanout(1, [1, 2])


def test_compile_plan_unicast(unicast_map):
    c = compile_plan(plan(unicast_map))
    assert c.depth == 6 and c.gate_count == 18


def test_compile_plan_multicast(multicast_map):
    c = compile_plan(plan(multicast_map))
    assert c.depth == 7
    assert c.layers[-1].gates == (CnGate(3, 4), CnGate(5, 6))
    assert stats(c).gate_count == 17


def test_compile_plan_identity():
    assert compile_plan(plan(ConnectionMap.permutation(range(4)))).depth == 0


def test_only_transpositions_take_three_layers():
    c = compile_plan(plan(ConnectionMap.permutation([1, 0, 3, 2])))
    assert c.depth == 3


def test_stats():
    assert stats(Circuit(3)) == stats(Circuit(3, ()))
    s = stats(Circuit(3))
    assert (s.depth, s.gate_count, s.per_layer_widths) == (0, 0, ())


def test_stats_unicast(unicast_map):
    s = stats(compile_plan(plan(unicast_map)))
    assert (s.depth, s.gate_count) == (6, 18)
    assert s.per_layer_widths == (3,) * 6


def test_text_format_exact(multicast_map):
    text = format_circuit(compile_plan(plan(multicast_map)))
    assert text == (
        "QSWITCH-CIRCUIT v1\n"
        "qubits 8\n"
        "L1: CN 1 2; CN 3 5; CN 6 7\n"
        "L2: CN 2 1; CN 5 3; CN 7 6\n"
        "L3: CN 1 2; CN 3 5; CN 6 7\n"
        "L4: CN 1 0; CN 3 2\n"
        "L5: CN 0 1; CN 2 3\n"
        "L6: CN 1 0; CN 3 2\n"
        "L7: CN 3 4; CN 5 6\n"
    )


def test_text_format_empty():
    assert format_circuit(Circuit(3)) == "QSWITCH-CIRCUIT v1\nqubits 3\n"
    assert parse_circuit("QSWITCH-CIRCUIT v1\nqubits 3\n") == Circuit(3)


def test_round_trip_random():
    from qswitch.digraph import random_connection_map

    r = random.Random(3)
    for _ in range(200):
        c = compile_plan(plan(random_connection_map(r.randint(1, 20), r)))
        assert parse_circuit(format_circuit(c)) == c


@pytest.mark.parametrize(
    "text, line",
    [
        ("nope\n", 1),
        ("QSWITCH-CIRCUIT v1\nqubits x\n", 2),
        ("QSWITCH-CIRCUIT v1\nqubits 3\nL1: CN 0 1; CN 1 2\n", 3),
        ("QSWITCH-CIRCUIT v1\nqubits 3\nL1: CN 0 1\nL3: CN 0 1\n", 4),
        ("QSWITCH-CIRCUIT v1\nqubits 3\nL1: XX 0 1\n", 3),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(CircuitError, match=f"line {line}"):
        parse_circuit(text)
