"""Reduce a connection digraph to disjoint loopbacks and cycles.

Every component is pushed towards a cycle: a null node gets a self-edge (E1),
a queue gets a tail-to-head edge (E2), a tree gets a leaf-to-root edge (E3)
which turns it into a forest.  A forest is split by cutting every edge that
leaves its cycle; the detached parts are reduced again until nothing but
loopbacks and cycles remains.

The cut edges are restored afterwards.  Once the cycles have been applied,
the cycle successor ``v_j`` of a cut node ``v_i`` holds ``v_i``'s inlet data,
and every cut target ``v_k`` holds the all-zero stuff bits of an idle inlet,
so a CN fan-out from ``v_j`` copies the data into place.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass

from .digraph import (
    ConnectionDigraph,
    ConnectionMap,
    Edge,
    Kind,
    SubDigraph,
    build_digraph,
    classify,
    decompose,
    split_components,
)


class PlanError(ValueError):
    pass


class Extension(str, enum.Enum):
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"


@dataclass(frozen=True)
class ExtensionRecord:
    kind: Extension
    added_edge: Edge

    def __str__(self) -> str:
        u, v = self.added_edge
        return f"{self.kind.value}: {u}->{v}"


@dataclass(frozen=True)
class RecoveryGroup:
    """Copy ``source``'s post-cycle data onto every port in ``targets``."""

    source: int
    targets: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.source}->[" + ",".join(map(str, self.targets)) + "]"


@dataclass(frozen=True)
class PermutationPlan:
    n: int
    cycles: tuple[tuple[int, ...], ...]
    loopbacks: frozenset[int]
    recovery: tuple[RecoveryGroup, ...] = ()
    extensions: tuple[ExtensionRecord, ...] = ()
    cut_edges: tuple[Edge, ...] = ()

    @property
    def r(self) -> int:
        """Largest number of targets fed by a single recovery source."""
        return max((len(g.targets) for g in self.recovery), default=0)

    def cycle_successor(self) -> dict[int, int]:
        succ = {v: v for v in self.loopbacks}
        for c in self.cycles:
            for i, v in enumerate(c):
                succ[v] = c[(i + 1) % len(c)]
        return succ

    def cycle_edges(self) -> set[Edge]:
        return set(self.cycle_successor().items())

    def check(self) -> PermutationPlan:
        """Raise :class:`PlanError` unless the structural invariants hold."""
        seen: list[int] = [v for c in self.cycles for v in c] + sorted(self.loopbacks)
        if sorted(seen) != list(range(self.n)):
            raise PlanError("cycles and loopbacks do not cover every port exactly once")
        if any(len(c) < 2 for c in self.cycles):
            raise PlanError("cycles must have length >= 2")
        sources = [g.source for g in self.recovery]
        targets = [t for g in self.recovery for t in g.targets]
        if len(set(targets)) != len(targets):
            raise PlanError("a port is the target of two recovery copies")
        if len(set(sources)) != len(sources) or set(sources) & set(targets):
            raise PlanError("recovery groups are not support-disjoint")
        return self


def extend_null(sub: SubDigraph) -> ExtensionRecord:
    if sub.kind is not Kind.NULL_NODE:
        raise PlanError(f"E1 needs a null node, got a {sub.kind.value}")
    v = sub.nodes[0]
    return ExtensionRecord(Extension.E1, (v, v))


def extend_queue(sub: SubDigraph) -> ExtensionRecord:
    if sub.kind is not Kind.QUEUE:
        raise PlanError(f"E2 needs a queue, got a {sub.kind.value}")
    return ExtensionRecord(Extension.E2, (sub.tail, sub.head))


def extend_tree(sub: SubDigraph, leaf: int | None = None) -> ExtensionRecord:
    """Link a leaf back to the root.  Defaults to the smallest leaf.

    A queue is accepted as the degenerate single-branch tree.
    """
    if sub.kind not in (Kind.TREE, Kind.QUEUE):
        raise PlanError(f"E3 needs a tree, got a {sub.kind.value}")
    leaves = sub.leaves
    if leaf is None:
        leaf = leaves[0]
    elif leaf not in leaves:
        raise PlanError(f"port {leaf} is not a leaf of the tree rooted at {sub.root}")
    return ExtensionRecord(Extension.E3, (leaf, sub.root))


def apply_extension(sub: SubDigraph, ext: ExtensionRecord) -> SubDigraph:
    return classify(sub.nodes, sub.edges | {ext.added_edge})


@dataclass(frozen=True)
class Extraction:
    cycle: tuple[int, ...]
    detached: tuple[SubDigraph, ...]
    cuts: tuple[Edge, ...]


def extract_cycle(sub: SubDigraph) -> Extraction:
    """Cut every edge leaving the forest's cycle and classify what falls off."""
    if sub.kind not in (Kind.FOREST, Kind.CYCLE, Kind.LOOPBACK):
        raise PlanError(f"cycle extraction needs a forest, got a {sub.kind.value}")
    cuts = tuple(sub.attachments)
    on_cycle = set(sub.cycle)
    rest = [v for v in sub.nodes if v not in on_cycle]
    rest_edges = [(u, v) for u, v in sub.edges if u not in on_cycle]
    detached = tuple(split_components(rest, rest_edges))
    for part in detached:
        if part.kind not in (Kind.NULL_NODE, Kind.QUEUE, Kind.TREE):
            raise PlanError(f"forest detached a {part.kind.value}; input had more than one cycle")
    return Extraction(sub.cycle, detached, cuts)


def plan(g: ConnectionDigraph | ConnectionMap) -> PermutationPlan:
    """Reduce ``g`` to loopbacks, cycles and recovery groups."""
    if isinstance(g, ConnectionMap):
        g = build_digraph(g)
    cycles: list[tuple[int, ...]] = []
    loopbacks: set[int] = set()
    extensions: list[ExtensionRecord] = []
    cuts: list[Edge] = []
    recovery: list[RecoveryGroup] = []

    work = deque(decompose(g))
    while work:
        sub = work.popleft()
        kind = sub.kind
        if kind is Kind.NULL_NODE:
            extensions.append(extend_null(sub))
            loopbacks.add(sub.nodes[0])
            continue
        if kind is Kind.LOOPBACK:
            loopbacks.add(sub.nodes[0])
            continue
        if kind is Kind.QUEUE:
            ext = extend_queue(sub)
            extensions.append(ext)
            sub = apply_extension(sub, ext)
        elif kind is Kind.TREE:
            ext = extend_tree(sub)
            extensions.append(ext)
            sub = apply_extension(sub, ext)

        part = extract_cycle(sub)
        if len(part.cycle) == 1:
            loopbacks.add(part.cycle[0])
        else:
            cycles.append(part.cycle)
        cuts.extend(part.cuts)
        recovery.extend(_recovery_groups(part.cycle, part.cuts))
        work.extend(part.detached)

    cycles.sort()
    recovery.sort(key=lambda grp: grp.source)
    return PermutationPlan(
        n=g.n,
        cycles=tuple(cycles),
        loopbacks=frozenset(loopbacks),
        recovery=tuple(recovery),
        extensions=tuple(extensions),
        cut_edges=tuple(sorted(cuts)),
    ).check()


def _recovery_groups(cycle: tuple[int, ...], cuts: tuple[Edge, ...]) -> list[RecoveryGroup]:
    succ = {v: cycle[(i + 1) % len(cycle)] for i, v in enumerate(cycle)}
    grouped: dict[int, list[int]] = {}
    for u, k in cuts:
        grouped.setdefault(succ[u], []).append(k)
    return [RecoveryGroup(src, tuple(sorted(ts))) for src, ts in grouped.items()]


def fanout_rounds(source: int, targets: tuple[int, ...] | list[int]) -> list[list[Edge]]:
    """Doubling schedule: every holder copies to one fresh target per round."""
    holders = [source]
    pending = list(targets)
    rounds: list[list[Edge]] = []
    while pending:
        batch = pending[: len(holders)]
        pending = pending[len(holders):]
        pairs = list(zip(holders, batch))
        rounds.append(pairs)
        holders.extend(batch)
    return rounds


def recovery_rounds(p: PermutationPlan) -> list[list[Edge]]:
    """Merge every group's fan-out schedule round by round.

    The result has ``ceil(log2(r + 1))`` rounds; pairs inside a round have
    disjoint supports because the groups do.
    """
    merged: list[list[Edge]] = []
    for grp in p.recovery:
        for k, pairs in enumerate(fanout_rounds(grp.source, grp.targets)):
            if k == len(merged):
                merged.append([])
            merged[k].extend(pairs)
    return [sorted(r) for r in merged]


def rounds_needed(r: int) -> int:
    return math.ceil(math.log2(r + 1)) if r > 0 else 0


def interpret(p: PermutationPlan, inlet_bits: list[int] | tuple[int, ...]) -> list[int]:
    """Run a plan directly on per-port bits, without building any gates.

    Cycles move each port's bit to its cycle successor, then recovery rounds
    XOR each source bit into its target.
    """
    succ = p.cycle_successor()
    out = [0] * p.n
    for u, v in succ.items():
        out[v] = inlet_bits[u]
    for rnd in recovery_rounds(p):
        for s, t in rnd:
            out[t] ^= out[s]
    return out
