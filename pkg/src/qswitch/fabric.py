"""End-to-end switch model and time-slotted replay.

Classical inlet bits enter as basis states, pass through the compiled CN
circuit for the slot's connection map, and are read back out.  A ``w``-bit
word is switched as ``w`` successive passes through the same circuit.

Each slot of a schedule describes the switch at the moment it fires: the
frame holds whatever words sit on the inlets at that slot (any buffering or
time-slot interchange happens before the switch sees them).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .digraph import IDLE, ConnectionMap, ConnectionMapError, Rule, Violation
from .planner import plan
from .qcircuit import Circuit, compile_plan
from .qsim import run_bits

SCHEDULE_HEADER = "QSWITCH-SCHEDULE v1"
OUTPUT_HEADER = "QSWITCH-OUTPUT v1"


class FrameError(ValueError):
    pass


class ScheduleError(ValueError):
    def __init__(self, message: str, slot: int | None = None, line: int | None = None):
        self.slot = slot
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if slot is not None:
            where.append(f"slot {slot}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class Frame:
    slot: int
    width: int
    payload: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        for port, word in self.payload.items():
            if not 0 <= word < (1 << self.width):
                raise FrameError(f"port {port}: word {word:#x} does not fit in {self.width} bits")

    def check_against(self, cmap: ConnectionMap) -> None:
        live = {u for u in range(cmap.n) if not cmap.is_idle(u)}
        given = set(self.payload)
        if given != live:
            extra = sorted(given - live)
            missing = sorted(live - given)
            raise FrameError(f"payload on idle inlets {extra}, missing on live inlets {missing}")


@dataclass(frozen=True)
class SlotSchedule:
    n: int
    width: int
    slots: tuple[tuple[ConnectionMap, Frame], ...] = ()


@dataclass(frozen=True)
class SwitchOutput:
    slot: int
    width: int
    payload: tuple[int, ...]
    valid_mask: tuple[bool, ...]
    sources: tuple[int | None, ...] = ()


class Switch:
    """Compiles each distinct connection map once and switches frames with it."""

    def __init__(self):
        self._cache: dict[ConnectionMap, Circuit] = {}
        self._lock = threading.Lock()

    def circuit(self, cmap: ConnectionMap) -> Circuit:
        c = self._cache.get(cmap)
        if c is None:
            c = compile_plan(plan(cmap.checked()))
            with self._lock:
                c = self._cache.setdefault(cmap, c)
        return c

    @property
    def cache_size(self) -> int:
        return len(self._cache)

    def switch_frame(self, cmap: ConnectionMap, frame: Frame) -> SwitchOutput:
        frame.check_against(cmap)
        c = self.circuit(cmap)
        words = [0] * cmap.n
        for b in range(frame.width):
            bits = [(frame.payload.get(u, 0) >> b) & 1 for u in range(cmap.n)]
            out = run_bits(c, bits)
            for v, bit in enumerate(out):
                words[v] |= bit << b
        delivery = cmap.delivery()
        sources = tuple(delivery.get(v) for v in range(cmap.n))
        return SwitchOutput(
            slot=frame.slot,
            width=frame.width,
            payload=tuple(words),
            valid_mask=tuple(s is not None for s in sources),
            sources=sources,
        )

    def run_schedule(self, schedule: SlotSchedule) -> list[SwitchOutput]:
        outputs = []
        for cmap, frame in schedule.slots:
            try:
                outputs.append(self.switch_frame(cmap, frame))
            except (ConnectionMapError, FrameError) as exc:
                raise ScheduleError(str(exc), slot=frame.slot) from exc
        return outputs


def switch_frame(cmap: ConnectionMap, frame: Frame) -> SwitchOutput:
    return Switch().switch_frame(cmap, frame)


def run_schedule(schedule: SlotSchedule) -> list[SwitchOutput]:
    return Switch().run_schedule(schedule)


class PacketArbiter:
    """Round-robin output arbitration for unicast packet headers.

    For every contended outlet the winner is the first requesting inlet at or
    after the priority pointer (cyclically).  The pointer moves on by one port
    after every slot, so a persistent request wins within ``n`` slots.
    """

    def __init__(self, n: int, pointer: int = 0):
        self.n = n
        self.pointer = pointer % n if n else 0

    def resolve(self, headers: Mapping[int, int]) -> tuple[ConnectionMap, frozenset[int]]:
        _check_headers(headers, self.n)
        winners: dict[int, int] = {}
        for u in sorted(headers, key=lambda p: (p - self.pointer) % self.n):
            winners.setdefault(headers[u], u)
        granted = {u: {v} for v, u in winners.items()}
        deferred = frozenset(headers) - set(granted)
        self.pointer = (self.pointer + 1) % self.n
        return ConnectionMap.from_dict(self.n, granted), deferred


def _check_headers(headers: Mapping[int, int], n: int) -> None:
    bad = [Violation(Rule.OUT_OF_RANGE, p) for p in sorted(headers) if not 0 <= p < n]
    bad += [Violation(Rule.OUT_OF_RANGE, v, f"requested by inlet {u}") for u, v in sorted(headers.items()) if not 0 <= v < n]
    if bad:
        raise ConnectionMapError(bad)


def resolve_packets(
    headers: Mapping[int, int], n: int, mode: str = "strict", priority: int = 0
) -> tuple[ConnectionMap, frozenset[int]]:
    """Turn per-inlet destination headers into a slot's connection map.

    ``strict`` rejects any output contention; ``arbiter`` grants each contended
    outlet to one inlet (see :class:`PacketArbiter`) and returns the rest as
    deferred.
    """
    if mode == "strict":
        _check_headers(headers, n)
        return ConnectionMap.from_dict(n, {u: {v} for u, v in headers.items()}), frozenset()
    if mode == "arbiter":
        return PacketArbiter(n, priority).resolve(headers)
    raise ValueError(f"unknown arbitration mode {mode!r}")


def _hex_digits(width: int) -> int:
    return max(1, -(-width // 4))


def _fmt_word(word: int, width: int) -> str:
    return format(word, f"0{_hex_digits(width)}x")


def format_schedule(schedule: SlotSchedule) -> str:
    lines = [SCHEDULE_HEADER, f"ports {schedule.n}", f"width {schedule.width}"]
    for cmap, frame in schedule.slots:
        lines.append(f"slot {frame.slot}")
        for u in range(schedule.n):
            d = cmap.dests[u]
            if d is IDLE:
                lines.append(f"{u}: X -")
            else:
                dests = ",".join(str(v) for v in sorted(d))
                lines.append(f"{u}: {dests} {_fmt_word(frame.payload[u], schedule.width)}")
    return "\n".join(lines) + "\n"


def _header_value(lines: list[str], idx: int, key: str) -> int:
    if idx >= len(lines):
        raise ScheduleError(f"expected '{key} <int>'", line=idx + 1)
    parts = lines[idx].split()
    if len(parts) != 2 or parts[0] != key:
        raise ScheduleError(f"expected '{key} <int>'", line=idx + 1)
    try:
        value = int(parts[1])
    except ValueError:
        raise ScheduleError(f"bad {key} value {parts[1]!r}", line=idx + 1) from None
    if value < 0:
        raise ScheduleError(f"{key} must be non-negative", line=idx + 1)
    return value


def parse_schedule(text: str) -> SlotSchedule:
    lines = [ln.strip() for ln in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if not lines or lines[0] != SCHEDULE_HEADER:
        raise ScheduleError(f"expected {SCHEDULE_HEADER!r}", line=1)
    n = _header_value(lines, 1, "ports")
    width = _header_value(lines, 2, "width")
    slots = []
    i = 3
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) != 2 or parts[0] != "slot":
            raise ScheduleError("expected 'slot <k>'", line=i + 1)
        try:
            k = int(parts[1])
        except ValueError:
            raise ScheduleError(f"bad slot index {parts[1]!r}", line=i + 1) from None
        mapping: dict[int, set[int]] = {}
        payload: dict[int, int] = {}
        for j in range(n):
            lineno = i + 2 + j
            if lineno > len(lines):
                raise ScheduleError(f"slot lists {j} of {n} ports", slot=k, line=lineno)
            port, dests, word = _parse_port_line(lines[lineno - 1], lineno, k)
            if port != j:
                raise ScheduleError(f"expected port {j}, got {port}", slot=k, line=lineno)
            if dests is None:
                if word is not None:
                    raise ScheduleError("idle inlet carries a payload", slot=k, line=lineno)
                continue
            if word is None:
                raise ScheduleError("live inlet has no payload", slot=k, line=lineno)
            mapping[port] = dests
            payload[port] = word
        try:
            cmap = ConnectionMap.from_dict(n, mapping)
            frame = Frame(k, width, payload)
        except (ConnectionMapError, FrameError) as exc:
            raise ScheduleError(str(exc), slot=k, line=i + 1) from exc
        slots.append((cmap, frame))
        i += n + 1
    return SlotSchedule(n, width, tuple(slots))


def _parse_port_line(line: str, lineno: int, slot: int) -> tuple[int, set[int] | None, int | None]:
    head, sep, rest = line.partition(":")
    parts = rest.split()
    if not sep or len(parts) != 2:
        raise ScheduleError("expected '<port>: <dests|X> <hex|->'", slot=slot, line=lineno)
    try:
        port = int(head)
        dests = None if parts[0] == "X" else {int(d) for d in parts[0].split(",")}
        word = None if parts[1] == "-" else int(parts[1], 16)
    except ValueError:
        raise ScheduleError(f"cannot parse {line!r}", slot=slot, line=lineno) from None
    return port, dests, word


def format_outputs(n: int, width: int, outputs: Iterable[SwitchOutput]) -> str:
    """Per slot: ``<outlet>: <source inlet|X> <hex>`` lines and a ``valid:`` mask."""
    lines = [OUTPUT_HEADER, f"ports {n}", f"width {width}"]
    for out in outputs:
        lines.append(f"slot {out.slot}")
        for v in range(n):
            src = out.sources[v] if out.sources else None
            lines.append(f"{v}: {'X' if src is None else src} {_fmt_word(out.payload[v], width)}")
        lines.append("valid: " + "".join("1" if ok else "0" for ok in out.valid_mask))
    return "\n".join(lines) + "\n"
