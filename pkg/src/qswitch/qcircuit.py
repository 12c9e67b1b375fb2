"""Layered CN-gate circuits for qubit permutation and replication.

A transposition of two qubits takes three CN gates.  A longer cycle
``(q_0, ..., q_{n-1})`` is the product of two sets of disjoint transpositions
``X`` and ``Y`` (apply ``X`` first), so every cycle, and any number of
disjoint cycles side by side, fits in six layers.  Basis-state replication
uses CN gates onto qubits that hold ``|0>``, doubling the number of copies per
layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .planner import PermutationPlan, fanout_rounds, recovery_rounds

HEADER = "QSWITCH-CIRCUIT v1"


class CircuitError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class CnGate:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise CircuitError(f"CN gate needs two distinct qubits, got {self.control} twice")

    def __str__(self) -> str:
        return f"CN {self.control} {self.target}"


@dataclass(frozen=True)
class Layer:
    """Gates that touch pairwise disjoint qubits, stored sorted by control."""

    gates: tuple[CnGate, ...] = ()

    def __post_init__(self):
        gates = tuple(sorted(self.gates))
        used: set[int] = set()
        for g in gates:
            if g.control in used or g.target in used:
                raise CircuitError(f"layer reuses a qubit at {g}")
            used.update((g.control, g.target))
        object.__setattr__(self, "gates", gates)

    @classmethod
    def of(cls, gates: Iterable[CnGate | tuple[int, int]]) -> Layer:
        return cls(tuple(g if isinstance(g, CnGate) else CnGate(*g) for g in gates))

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    @property
    def qubits(self) -> set[int]:
        return {q for g in self.gates for q in (g.control, g.target)}


@dataclass(frozen=True)
class Circuit:
    n: int
    layers: tuple[Layer, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for layer in self.layers:
            for q in layer.qubits:
                if not 0 <= q < self.n:
                    raise CircuitError(f"gate on qubit {q} outside a {self.n}-qubit circuit")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def gates(self) -> list[CnGate]:
        return [g for layer in self.layers for g in layer]

    def then(self, other: Circuit) -> Circuit:
        if other.n != self.n:
            raise CircuitError("cannot concatenate circuits of different width")
        return Circuit(self.n, self.layers + other.layers)


@dataclass(frozen=True)
class TranspositionSet:
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        flat = [q for p in self.pairs for q in p]
        if len(flat) != len(set(flat)):
            raise CircuitError(f"transpositions overlap: {self.pairs}")

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __str__(self) -> str:
        return "".join(f"(q{a},q{b})" for a, b in self.pairs)


@dataclass(frozen=True)
class CircuitStats:
    depth: int
    gate_count: int
    per_layer_widths: tuple[int, ...]


def transposition_gates(a: int, b: int) -> list[CnGate]:
    if a == b:
        raise CircuitError(f"cannot transpose qubit {a} with itself")
    return [CnGate(a, b), CnGate(b, a), CnGate(a, b)]


def compile_transposition(a: int, b: int) -> list[Layer]:
    return [Layer((g,)) for g in transposition_gates(a, b)]


def cycle_xy(cycle: Sequence[int]) -> tuple[TranspositionSet, TranspositionSet]:
    """Split a cycle of length >= 3 into two layers of disjoint swaps.

    Positions index the cycle as given: ``cycle[0]`` is ``q_0``.  Swapping by
    ``X`` and then by ``Y`` moves the state on ``cycle[i]`` to
    ``cycle[i + 1]``.
    """
    q = list(cycle)
    n = len(q)
    if n < 3:
        raise CircuitError(f"X/Y construction needs a cycle of length >= 3, got {n}")
    if len(set(q)) != n:
        raise CircuitError(f"cycle repeats a port: {tuple(q)}")
    m = n // 2
    if n % 2 == 0:
        x = [(q[m - j], q[m + j]) for j in range(1, m)]
        y = [(q[m - j], q[(m + j + 1) % n]) for j in range(m)]
    else:
        x = [(q[m - j + 1], q[m + j]) for j in range(1, m + 1)]
        y = [(q[m - j + 1], q[(m + j + 1) % n]) for j in range(1, m + 1)]
    return TranspositionSet(tuple(x)), TranspositionSet(tuple(y))


def _swap_layers(pairs: Iterable[tuple[int, int]]) -> list[list[CnGate]]:
    out: list[list[CnGate]] = [[], [], []]
    for a, b in pairs:
        for k, g in enumerate(transposition_gates(a, b)):
            out[k].append(g)
    return out


def _cycle_gate_slots(cycle: Sequence[int]) -> list[list[CnGate]]:
    if len(cycle) == 2:
        return _swap_layers([tuple(cycle)])
    x, y = cycle_xy(cycle)
    return _swap_layers(x) + _swap_layers(y)


def compile_cycle(cycle: Sequence[int]) -> list[Layer]:
    """Three layers for a transposition, six for anything longer."""
    if len(cycle) < 2:
        raise CircuitError("a trivial cycle needs no circuit")
    return [Layer(tuple(gs)) for gs in _cycle_gate_slots(cycle)]


def compile_fanout(source: int, targets: Sequence[int]) -> list[Layer]:
    """Copy a basis-state ``source`` onto ``targets`` (all assumed ``|0>``)."""
    if source in targets:
        raise CircuitError(f"source {source} is also a fan-out target")
    if len(set(targets)) != len(targets):
        raise CircuitError("fan-out targets repeat")
    return [Layer.of(pairs) for pairs in fanout_rounds(source, tuple(targets))]


def compile_plan(p: PermutationPlan) -> Circuit:
    """Cycles share the leading (at most six) layers; recovery rounds follow."""
    slots: list[list[CnGate]] = [[] for _ in range(6)]
    for cycle in p.cycles:
        for k, gates in enumerate(_cycle_gate_slots(cycle)):
            slots[k].extend(gates)
    while slots and not slots[-1]:
        slots.pop()
    layers = [Layer(tuple(gs)) for gs in slots]
    layers += [Layer.of(r) for r in recovery_rounds(p)]
    return Circuit(p.n, tuple(layers))


def stats(c: Circuit) -> CircuitStats:
    widths = tuple(len(layer) for layer in c.layers)
    return CircuitStats(depth=len(widths), gate_count=sum(widths), per_layer_widths=widths)


def format_circuit(c: Circuit) -> str:
    lines = [HEADER, f"qubits {c.n}"]
    for k, layer in enumerate(c.layers, start=1):
        body = "; ".join(str(g) for g in layer)
        lines.append(f"L{k}: {body}" if body else f"L{k}:")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    """Inverse of :func:`format_circuit`.  Errors carry 1-based line numbers."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or lines[0].strip() != HEADER:
        raise CircuitError(f"line 1: expected {HEADER!r}")
    if len(lines) < 2 or not lines[1].startswith("qubits "):
        raise CircuitError("line 2: expected 'qubits <n>'")
    try:
        n = int(lines[1].split()[1])
    except (IndexError, ValueError):
        raise CircuitError("line 2: bad qubit count") from None
    layers: list[Layer] = []
    for lineno, line in enumerate(lines[2:], start=3):
        label, sep, body = line.partition(":")
        if not sep or label.strip() != f"L{len(layers) + 1}":
            raise CircuitError(f"line {lineno}: expected 'L{len(layers) + 1}: ...'")
        gates = []
        for item in filter(None, (s.strip() for s in body.split(";"))):
            parts = item.split()
            if len(parts) != 3 or parts[0] != "CN":
                raise CircuitError(f"line {lineno}: bad gate {item!r}")
            try:
                gates.append(CnGate(int(parts[1]), int(parts[2])))
            except ValueError as exc:
                raise CircuitError(f"line {lineno}: {exc}") from None
        try:
            layers.append(Layer(tuple(gates)))
        except CircuitError as exc:
            raise CircuitError(f"line {lineno}: {exc}") from None
    try:
        return Circuit(n, tuple(layers))
    except CircuitError as exc:
        raise CircuitError(f"line {len(lines)}: {exc}") from None
