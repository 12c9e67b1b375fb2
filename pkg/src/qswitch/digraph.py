"""Connection maps and connection digraphs.

A switch configuration for one time slot is a :class:`ConnectionMap`: every
input port is either idle or sends its data to a non-empty set of output
ports.  Turning it into a :class:`ConnectionDigraph` gives the graph over I/O
ports whose edge ``u -> v`` means "inlet ``u`` is delivered to outlet ``v``".
Because no outlet may have two predecessors, every weakly connected component
is one of six shapes (null node, loopback, queue, cycle, tree, forest), which
:func:`decompose` recovers.
"""

from __future__ import annotations

import enum
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

Edge = tuple[int, int]


class _Idle:
    """Marker for an inlet with no traffic in the current slot."""

    _instance: _Idle | None = None

    def __new__(cls) -> _Idle:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "IDLE"

    def __reduce__(self):
        return (_Idle, ())


IDLE = _Idle()


class Kind(str, enum.Enum):
    # Declaration order is the specificity order used by classify().
    NULL_NODE = "null node"
    LOOPBACK = "loopback"
    QUEUE = "queue"
    CYCLE = "cycle"
    TREE = "tree"
    FOREST = "forest"


class Rule(str, enum.Enum):
    OUT_OF_RANGE = "OutOfRange"
    OUTPUT_CONTENTION = "OutputContention"
    EMPTY_DEST_SET = "EmptyDestSet"


@dataclass(frozen=True)
class Violation:
    rule: Rule
    port: int
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.rule.value}(port {self.port})"
        return f"{text}: {self.detail}" if self.detail else text


class ConnectionMapError(ValueError):
    """Raised when a connection map breaks the at-most-one-predecessor model."""

    def __init__(self, violations: Iterable[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class UnclassifiableError(ValueError):
    pass


@dataclass(frozen=True)
class ConnectionMap:
    """Per-inlet destination sets for an ``n x n`` switch.

    ``dests[u]`` is :data:`IDLE` or a frozenset of outlet indices.  The raw
    constructor accepts anything so that :func:`validate` can report on it;
    use :meth:`from_dict` (or :meth:`checked`) to fail fast instead.
    """

    n: int
    dests: tuple

    @classmethod
    def from_dict(
        cls, n: int, mapping: Mapping[int, Iterable[int] | _Idle | None], strict: bool = True
    ) -> ConnectionMap:
        """Build a map from ``{inlet: destinations}``; missing inlets are idle.

        ``None`` and :data:`IDLE` both mean idle.  With ``strict`` (default)
        the map is validated on construction.
        """
        dests: list = [IDLE] * n
        for u, d in mapping.items():
            if d is None or d is IDLE:
                continue
            if not 0 <= u < n:
                raise ConnectionMapError([Violation(Rule.OUT_OF_RANGE, u, f"inlet outside [0, {n})")])
            dests[u] = frozenset(d)
        cmap = cls(n, tuple(dests))
        return cmap.checked() if strict else cmap

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge], strict: bool = True) -> ConnectionMap:
        grouped: dict[int, set[int]] = defaultdict(set)
        for u, v in edges:
            grouped[u].add(v)
        return cls.from_dict(n, grouped, strict=strict)

    @classmethod
    def permutation(cls, targets: Iterable[int]) -> ConnectionMap:
        """Unicast map sending inlet ``i`` to ``targets[i]``."""
        targets = list(targets)
        return cls.from_dict(len(targets), {u: {v} for u, v in enumerate(targets)})

    def checked(self) -> ConnectionMap:
        violations = validate(self)
        if violations:
            raise ConnectionMapError(violations)
        return self

    def is_idle(self, u: int) -> bool:
        return self.dests[u] is IDLE

    def edges(self) -> list[Edge]:
        return sorted((u, v) for u, d in enumerate(self.dests) if d is not IDLE for v in d)

    def delivery(self) -> dict[int, int]:
        """Outlet -> inlet for every outlet that has a predecessor."""
        return {v: u for u, v in self.edges()}

    @property
    def is_unicast(self) -> bool:
        return all(d is IDLE or len(d) == 1 for d in self.dests)


def validate(cmap: ConnectionMap) -> list[Violation]:
    """Return every rule the map breaks; an empty list means it is valid."""
    out: list[Violation] = []
    n = cmap.n
    if len(cmap.dests) != n:
        out.append(Violation(Rule.OUT_OF_RANGE, len(cmap.dests), f"map lists {len(cmap.dests)} inlets for {n} ports"))
    owner: dict[int, int] = {}
    reported: set[int] = set()
    for u, d in enumerate(cmap.dests):
        if d is IDLE:
            continue
        if not d:
            out.append(Violation(Rule.EMPTY_DEST_SET, u, "use IDLE for an inlet without traffic"))
            continue
        for v in sorted(d):
            if not 0 <= v < n:
                out.append(Violation(Rule.OUT_OF_RANGE, v, f"destination of inlet {u} outside [0, {n})"))
            elif v in owner:
                if v not in reported:
                    out.append(Violation(Rule.OUTPUT_CONTENTION, v, f"requested by inlets {owner[v]} and {u}"))
                    reported.add(v)
            else:
                owner[v] = u
    return out


@dataclass(frozen=True)
class ConnectionDigraph:
    n: int
    edges: frozenset[Edge]
    _succ: dict = field(init=False, repr=False, compare=False, hash=False)
    _pred: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        succ: dict[int, list[int]] = defaultdict(list)
        pred: dict[int, int] = {}
        for u, v in sorted(self.edges):
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ConnectionMapError([Violation(Rule.OUT_OF_RANGE, v if 0 <= u < self.n else u)])
            if v in pred:
                raise ConnectionMapError([Violation(Rule.OUTPUT_CONTENTION, v)])
            succ[u].append(v)
            pred[v] = u
        object.__setattr__(self, "_succ", dict(succ))
        object.__setattr__(self, "_pred", pred)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> ConnectionDigraph:
        return cls(n, frozenset(edges))

    def successors(self, u: int) -> list[int]:
        return list(self._succ.get(u, ()))

    def predecessor(self, v: int) -> int | None:
        return self._pred.get(v)

    def to_map(self) -> ConnectionMap:
        return ConnectionMap.from_edges(self.n, self.edges)


def build_digraph(cmap: ConnectionMap) -> ConnectionDigraph:
    cmap.checked()
    return ConnectionDigraph(cmap.n, frozenset(cmap.edges()))


def normalize_cycle(cycle: Iterable[int]) -> tuple[int, ...]:
    """Rotate a cycle so that its smallest port comes first."""
    cycle = tuple(cycle)
    if not cycle:
        return cycle
    k = cycle.index(min(cycle))
    return cycle[k:] + cycle[:k]


@dataclass(frozen=True)
class SubDigraph:
    """One weakly connected component together with its classification.

    ``nodes`` is ordered by kind: a queue lists head to tail, a cycle is
    rotated to start at its smallest port, a tree is listed breadth-first
    from its root, and a forest lists its cycle first followed by the
    attached nodes breadth-first.
    """

    kind: Kind
    nodes: tuple[int, ...]
    edges: frozenset[Edge]
    cycle: tuple[int, ...] = ()

    def successors(self, u: int) -> list[int]:
        return sorted(v for a, v in self.edges if a == u)

    @property
    def in_degree(self) -> dict[int, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for _, v in self.edges:
            deg[v] += 1
        return deg

    @property
    def out_degree(self) -> dict[int, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for u, _ in self.edges:
            deg[u] += 1
        return deg

    @property
    def root(self) -> int:
        if self.kind not in (Kind.QUEUE, Kind.TREE):
            raise AttributeError(f"a {self.kind.value} has no root")
        return self.nodes[0]

    head = root

    @property
    def tail(self) -> int:
        if self.kind is not Kind.QUEUE:
            raise AttributeError(f"a {self.kind.value} has no tail")
        return self.nodes[-1]

    @property
    def leaves(self) -> list[int]:
        if self.kind not in (Kind.QUEUE, Kind.TREE):
            raise AttributeError(f"a {self.kind.value} has no leaves")
        out = self.out_degree
        return sorted(v for v in self.nodes if out[v] == 0)

    @property
    def children(self) -> dict[int, list[int]]:
        return {u: self.successors(u) for u in self.nodes}

    @property
    def attachments(self) -> list[Edge]:
        """Edges leaving the cycle of a forest (the ones cycle extraction cuts)."""
        on_cycle = set(self.cycle)
        return sorted((u, v) for u, v in self.edges if u in on_cycle and v not in on_cycle)

    def describe(self) -> str:
        if self.kind in (Kind.NULL_NODE, Kind.LOOPBACK):
            return f"{self.kind.value} P{self.nodes[0]}"
        if self.kind is Kind.QUEUE:
            return "queue [" + ",".join(f"P{v}" for v in self.nodes) + "]"
        if self.kind is Kind.CYCLE:
            return "cycle (" + ",".join(f"P{v}" for v in self.cycle) + ")"
        if self.kind is Kind.TREE:
            leaves = self.leaves
            noun = "leaf" if len(leaves) == 1 else "leaves"
            return f"tree (root P{self.root}, {len(leaves)} {noun})"
        cyc = ",".join(f"P{v}" for v in self.cycle)
        return f"forest (cycle ({cyc}), {len(self.nodes) - len(self.cycle)} attached)"


def _find_cycle(nodes: Iterable[int], succ: Mapping[int, list[int]], pred: Mapping[int, int]) -> tuple[int, ...]:
    # With in-degree <= 1, walking predecessors from any node either stops at a
    # root (no cycle) or enters the unique cycle.
    start = next(iter(nodes))
    seen: dict[int, int] = {}
    path: list[int] = []
    v: int | None = start
    while v is not None and v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = pred.get(v)
    if v is None:
        return ()
    back = path[seen[v]:]
    return normalize_cycle(reversed(back))


def _bfs(starts: Iterable[int], succ: Mapping[int, list[int]], skip: set[int]) -> list[int]:
    order: list[int] = []
    seen = set(skip)
    queue = deque()
    for s in starts:
        if s not in seen:
            seen.add(s)
            queue.append(s)
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in succ.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return order


def classify(nodes: Iterable[int], edges: Iterable[Edge]) -> SubDigraph:
    """Classify one weakly connected component by its most specific kind.

    Raises:
        UnclassifiableError: if a node has two predecessors, an edge leaves
            the node set, or the input is empty.
    """
    node_set = set(nodes)
    edge_set = frozenset(edges)
    if not node_set:
        raise UnclassifiableError("empty component")
    succ: dict[int, list[int]] = defaultdict(list)
    pred: dict[int, int] = {}
    for u, v in sorted(edge_set):
        if u not in node_set or v not in node_set:
            raise UnclassifiableError(f"edge {u}->{v} leaves the component")
        if v in pred:
            raise UnclassifiableError(f"node {v} has two predecessors ({pred[v]} and {u})")
        succ[u].append(v)
        pred[v] = u
    if len(_bfs([min(node_set)], _undirected(edge_set), set())) != len(node_set):
        raise UnclassifiableError("component is not weakly connected")

    if len(node_set) == 1:
        (v,) = node_set
        kind = Kind.LOOPBACK if edge_set else Kind.NULL_NODE
        return SubDigraph(kind, (v,), edge_set, (v,) if edge_set else ())

    branching = any(len(s) > 1 for s in succ.values())
    cycle = _find_cycle(sorted(node_set), succ, pred)
    if not cycle:
        (root,) = [v for v in node_set if v not in pred]
        order = tuple(_bfs([root], succ, set()))
        return SubDigraph(Kind.TREE if branching else Kind.QUEUE, order, edge_set)
    if len(cycle) == len(node_set):
        return SubDigraph(Kind.CYCLE, cycle, edge_set, cycle)
    rest = _bfs(cycle, succ, set())
    return SubDigraph(Kind.FOREST, tuple(rest), edge_set, cycle)


def _undirected(edges: Iterable[Edge]) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = defaultdict(list)
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return adj


def split_components(nodes: Iterable[int], edges: Iterable[Edge]) -> list[SubDigraph]:
    """Partition ``nodes`` into weakly connected components and classify each.

    Components come back ordered by their smallest port.
    """
    node_list = sorted(set(nodes))
    edge_set = frozenset(edges)
    adj = _undirected(edge_set)
    by_node: dict[int, list[Edge]] = defaultdict(list)
    for e in edge_set:
        by_node[e[0]].append(e)
    seen: set[int] = set()
    parts: list[SubDigraph] = []
    for v in node_list:
        if v in seen:
            continue
        comp = _bfs([v], adj, seen)
        seen.update(comp)
        comp_edges = [e for u in comp for e in by_node[u]]
        parts.append(classify(comp, comp_edges))
    return parts


def decompose(g: ConnectionDigraph) -> list[SubDigraph]:
    return split_components(range(g.n), g.edges)


def random_connection_map(n: int, rng, unicast: bool = False, load: float | None = None) -> ConnectionMap:
    """Draw a valid connection map from a ``random.Random``-like ``rng``.

    Each outlet gets a predecessor with probability ``load`` (random when not
    given).  Multicast maps pick predecessors from a random pool of inlets so
    that both wide fan-outs and long chains show up; unicast maps are partial
    permutations.
    """
    if load is None:
        load = rng.random()
    outlets = [v for v in range(n) if rng.random() < load]
    if unicast:
        inlets = rng.sample(range(n), len(outlets))
        return ConnectionMap.from_dict(n, {u: {v} for u, v in zip(inlets, outlets)})
    pool = rng.sample(range(n), rng.randint(1, n)) if n else []
    grouped: dict[int, set[int]] = defaultdict(set)
    for v in outlets:
        grouped[rng.choice(pool)].add(v)
    return ConnectionMap.from_dict(n, grouped)
