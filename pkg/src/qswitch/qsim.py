"""Simulators and oracles for CN-gate circuits.

Basis labels put qubit ``j`` on bit ``j`` (qubit 0 is the least significant
bit), so the amplitude of ``|b_{n-1} ... b_1 b_0>`` lives at index
``sum(b_j << j)``.  Measurement draws from ``numpy.random.default_rng(seed)``
(PCG64).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .digraph import ConnectionMap
from .qcircuit import Circuit, CnGate

DEFAULT_MAX_QUBITS = 12
TOL = 1e-12
ZERO = None  # outlet that carries only stuff bits

BitState = tuple[int, ...]


class SimulationError(ValueError):
    pass


class NotAPortMap(SimulationError):
    """The circuit routes some outlet to something other than a single inlet."""

    def __init__(self, outlet: int, detail: str):
        self.outlet = outlet
        super().__init__(f"outlet {outlet}: {detail}")


def apply_cn_bits(bits: Sequence[int], g: CnGate) -> BitState:
    n = len(bits)
    if not (0 <= g.control < n and 0 <= g.target < n):
        raise SimulationError(f"{g} outside a {n}-bit state")
    out = list(bits)
    out[g.target] ^= out[g.control]
    return tuple(out)


def run_bits(c: Circuit, bits: Sequence[int]) -> BitState:
    """Apply the circuit to classical bits, layer by layer.

    Entries may also be arbitrary non-negative ints, in which case every bit
    position is simulated in parallel (CN only ever XORs).
    """
    if len(bits) != c.n:
        raise SimulationError(f"circuit has {c.n} qubits, state has {len(bits)}")
    out = list(bits)
    for layer in c.layers:
        for g in layer:
            out[g.target] ^= out[g.control]
    return tuple(out)


def trace_bits(c: Circuit, bits: Sequence[int]) -> list[BitState]:
    """States before every layer, plus the final state."""
    if len(bits) != c.n:
        raise SimulationError(f"circuit has {c.n} qubits, state has {len(bits)}")
    state = list(bits)
    trace = [tuple(state)]
    for layer in c.layers:
        for g in layer:
            state[g.target] ^= state[g.control]
        trace.append(tuple(state))
    return trace


def _check_size(n: int, max_qubits: int) -> None:
    if n > max_qubits:
        raise SimulationError(f"{n} qubits exceeds the state-vector cap of {max_qubits}")


def basis_state(bits: Sequence[int], max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    n = len(bits)
    _check_size(n, max_qubits)
    v = np.zeros(1 << n, dtype=complex)
    v[sum(int(b) << j for j, b in enumerate(bits))] = 1.0
    return v


def product_state(qubits: Iterable[Sequence[complex]]) -> np.ndarray:
    """Tensor product with ``qubits[0]`` on the least significant bit."""
    v = np.ones(1, dtype=complex)
    for q in qubits:
        v = np.kron(np.asarray(q, dtype=complex), v)
    return v


def _num_qubits(v: np.ndarray) -> int:
    n = int(v.size).bit_length() - 1
    if v.ndim != 1 or v.size != 1 << n:
        raise SimulationError(f"state vector length {v.size} is not a power of two")
    return n


def apply_cn_state(v: np.ndarray, g: CnGate, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """Move every amplitude whose control bit is 1 to the target-flipped index."""
    n = _num_qubits(v)
    _check_size(n, max_qubits)
    if not (g.control < n and g.target < n):
        raise SimulationError(f"{g} outside a {n}-qubit state")
    out = v.copy()
    _cn_inplace(out, v, g)
    return out


def _cn_inplace(dst: np.ndarray, src: np.ndarray, g: CnGate) -> None:
    idx = np.arange(src.size)
    sel = idx[(idx >> g.control) & 1 == 1]
    dst[sel ^ (1 << g.target)] = src[sel]


def run_state(c: Circuit, v: np.ndarray, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    n = _num_qubits(v)
    _check_size(n, max_qubits)
    if n != c.n:
        raise SimulationError(f"circuit has {c.n} qubits, state has {n}")
    cur = np.array(v, dtype=complex)
    nxt = cur.copy()
    for layer in c.layers:
        for g in layer:
            nxt[:] = cur
            _cn_inplace(nxt, cur, g)
            cur, nxt = nxt, cur
    return cur


def norm2(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


def measure(v: np.ndarray, seed: int | None = 0) -> BitState:
    """Project onto a basis state with probability ``|c_i|**2``."""
    n = _num_qubits(v)
    probs = np.abs(v) ** 2
    total = probs.sum()
    if abs(total - 1.0) > TOL:
        raise SimulationError(f"state is not normalized (norm^2 = {total!r})")
    rng = np.random.default_rng(seed)
    k = int(rng.choice(v.size, p=probs / total))
    return tuple((k >> j) & 1 for j in range(n))


def sample(v: np.ndarray, shots: int, seed: int | None = 0) -> list[BitState]:
    """``shots`` independent measurements of copies of ``v`` from one RNG stream."""
    n = _num_qubits(v)
    probs = np.abs(v) ** 2
    total = probs.sum()
    if abs(total - 1.0) > TOL:
        raise SimulationError(f"state is not normalized (norm^2 = {total!r})")
    rng = np.random.default_rng(seed)
    ks = rng.choice(v.size, size=shots, p=probs / total)
    return [tuple((int(k) >> j) & 1 for j in range(n)) for k in ks]


def circuit_matrix(c: Circuit, max_qubits: int = 6) -> np.ndarray:
    """Column ``k`` is the circuit applied to basis state ``k``."""
    _check_size(c.n, max_qubits)
    size = 1 << c.n
    cols = []
    for k in range(size):
        e = np.zeros(size, dtype=complex)
        e[k] = 1.0
        cols.append(run_state(c, e, max_qubits=max_qubits))
    return np.column_stack(cols)


def is_permutation_matrix(u: np.ndarray) -> bool:
    if not np.all((u == 0) | (u == 1)):
        return False
    return bool(np.all(u.sum(axis=0) == 1) and np.all(u.sum(axis=1) == 1))


@dataclass(frozen=True)
class PortPermutationMap:
    """For each outlet, the inlet whose bit it carries, or ``None`` for zeros."""

    out_source: tuple[int | None, ...]

    def __getitem__(self, outlet: int) -> int | None:
        return self.out_source[outlet]

    def __len__(self) -> int:
        return len(self.out_source)

    @classmethod
    def from_map(cls, cmap: ConnectionMap) -> PortPermutationMap:
        """Expected routing of a connection map: outlet -> predecessor."""
        delivery = cmap.delivery()
        return cls(tuple(delivery.get(v) for v in range(cmap.n)))

    def mismatches(self, other: PortPermutationMap) -> list[int]:
        return [v for v, (a, b) in enumerate(zip(self.out_source, other.out_source)) if a != b]


def _exhaustive_words(n: int) -> list[int]:
    words = []
    for j in range(n):
        # Bit k of word j is bit j of basis label k.
        block = ((1 << (1 << j)) - 1) << (1 << j)
        period = 1 << (j + 1)
        w = 0
        for start in range(0, 1 << n, period):
            w |= block << start
        words.append(w)
    return words


def extract_port_map(c: Circuit, method: str = "onehot", idle: Iterable[int] = ()) -> PortPermutationMap:
    """Recover which inlet each outlet copies by brute-force simulation.

    Inlets listed in ``idle`` are held at the all-zero stuff bits, as the
    switch does for inlets without traffic; every other inlet is driven.
    ``onehot`` drives one live inlet at a time and needs ``n <= 20``;
    ``exhaustive`` tries every assignment of the live inlets and needs at
    most 10 of them.

    Raises:
        NotAPortMap: an outlet carries a XOR of several inlets.
    """
    n = c.n
    idle = set(idle)
    live = [u for u in range(n) if u not in idle]
    if method == "onehot":
        if n > 20:
            raise SimulationError("one-hot extraction is limited to 20 qubits")
        patterns = [1 << k for k in range(len(live))]
    elif method == "exhaustive":
        if len(live) > 10:
            raise SimulationError("exhaustive extraction is limited to 10 live inlets")
        patterns = _exhaustive_words(len(live))
    else:
        raise ValueError(f"unknown method {method!r}")

    words = [0] * n
    for u, w in zip(live, patterns):
        words[u] = w
    out = run_bits(c, words)
    lookup = {w: u for u, w in zip(live, patterns)}
    sources: list[int | None] = []
    for v, w in enumerate(out):
        if w == 0:
            sources.append(ZERO)
        elif w in lookup:
            sources.append(lookup[w])
        else:
            raise NotAPortMap(v, "carries a mixture of inlets")
    return PortPermutationMap(tuple(sources))


def idle_inlets(cmap: ConnectionMap) -> list[int]:
    return [u for u in range(cmap.n) if cmap.is_idle(u)]
