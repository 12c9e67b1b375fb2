"""``qswitch`` command-line front end.

Exit status: 0 on success or PASS, 1 when a map is invalid or a verification
fails, 2 for usage, parse and I/O errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .digraph import (
    IDLE,
    ConnectionMap,
    ConnectionMapError,
    Kind,
    Rule,
    build_digraph,
    decompose,
    random_connection_map,
    validate,
)
from .fabric import ScheduleError, Switch, format_outputs, parse_schedule
from .planner import PermutationPlan, plan, rounds_needed
from .qcircuit import Circuit, CircuitError, compile_plan, format_circuit, parse_circuit, stats
from .qsim import (
    DEFAULT_MAX_QUBITS,
    TOL,
    NotAPortMap,
    PortPermutationMap,
    SimulationError,
    basis_state,
    circuit_matrix,
    extract_port_map,
    idle_inlets,
    is_permutation_matrix,
    norm2,
    run_bits,
    run_state,
)

MAP_HEADER = "QSWITCH-MAP v1"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class MapFileError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass
class MapFile:
    cmap: ConnectionMap
    lines: dict[int, int]  # inlet -> line number


def parse_map_text(text: str) -> MapFile:
    """Parse a map file without validating the connections themselves."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or lines[0].strip() != MAP_HEADER:
        raise MapFileError(1, f"expected {MAP_HEADER!r}")
    parts = lines[1].split() if len(lines) > 1 else []
    if len(parts) != 2 or parts[0] != "ports" or not parts[1].isdigit():
        raise MapFileError(2, "expected 'ports <n>'")
    n = int(parts[1])
    dests: list[Any] = [None] * n
    where: dict[int, int] = {}
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        head, sep, body = line.partition(":")
        try:
            port = int(head)
        except ValueError:
            raise MapFileError(lineno, f"bad port {head.strip()!r}") from None
        if not sep:
            raise MapFileError(lineno, "expected '<port>: <dest[,dest...]>' or '<port>: X'")
        if not 0 <= port < n:
            raise MapFileError(lineno, f"port {port} outside [0, {n})")
        if port in where:
            raise MapFileError(lineno, f"port {port} already listed on line {where[port]}")
        body = body.strip()
        if body == "X":
            dests[port] = IDLE
        else:
            try:
                dests[port] = frozenset(int(d) for d in body.split(",")) if body else frozenset()
            except ValueError:
                raise MapFileError(lineno, f"bad destination list {body!r}") from None
        where[port] = lineno
    missing = [p for p in range(n) if p not in where]
    if missing:
        raise MapFileError(len(lines), f"ports {missing} are not listed")
    return MapFile(ConnectionMap(n, tuple(dests)), where)


def format_map(cmap: ConnectionMap) -> str:
    lines = [MAP_HEADER, f"ports {cmap.n}"]
    for u, d in enumerate(cmap.dests):
        lines.append(f"{u}: X" if d is IDLE else f"{u}: " + ",".join(str(v) for v in sorted(d)))
    return "\n".join(lines) + "\n"


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


@dataclass
class Report:
    """Everything one command found out, printable as text or JSON."""

    command: str
    ports: int | None = None
    valid: bool | None = None
    violations: list[dict] = field(default_factory=list)
    components: list[dict] = field(default_factory=list)
    extensions: list[str] = field(default_factory=list)
    cut_edges: list[list[int]] = field(default_factory=list)
    cycles: list[list[int]] = field(default_factory=list)
    loopbacks: list[int] = field(default_factory=list)
    recovery: list[dict] = field(default_factory=list)
    r: int | None = None
    depth: int | None = None
    gate_count: int | None = None
    layer_widths: list[int] = field(default_factory=list)
    checks: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        if self.valid is False:
            return False
        return all(c["verdict"] == "PASS" for c in self.checks)

    def add_check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append({"name": name, "verdict": "PASS" if ok else "FAIL", "detail": detail})

    def summary(self) -> str:
        counts = Counter(c["kind"] for c in self.components)
        parts = []
        for kind in Kind:
            k = counts.get(kind.value, 0)
            if k:
                noun = kind.value if k == 1 else ("null nodes" if kind is Kind.NULL_NODE else kind.value + "s")
                parts.append(f"{k} {noun}")
        return ", ".join(parts)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "ports": self.ports,
            "valid": self.valid,
            "violations": self.violations,
            "components": self.components,
            "summary": self.summary(),
            "extensions": self.extensions,
            "cut_edges": self.cut_edges,
            "cycles": self.cycles,
            "loopbacks": self.loopbacks,
            "recovery": self.recovery,
            "r": self.r,
            "depth": self.depth,
            "gate_count": self.gate_count,
            "layer_widths": self.layer_widths,
            "checks": self.checks,
            "result": "PASS" if self.passed else "FAIL",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        out = [f"{self.command}: {'PASS' if self.passed else 'FAIL'}"]
        if self.ports is not None:
            out.append(f"ports: {self.ports}")
        for v in self.violations:
            line = f" (line {v['line']})" if v.get("line") else ""
            out.append(f"violation: {v['rule']} at port {v['port']}{line}: {v['detail']}")
        if self.components:
            out.append(f"summary: {self.summary()}")
            out.extend(f"  {c['description']}" for c in self.components)
        if self.extensions:
            out.append("extensions: " + ", ".join(self.extensions))
        if self.cut_edges:
            out.append("cut edges: " + ", ".join(f"q{u}->q{v}" for u, v in self.cut_edges))
        if self.cycles:
            out.append("cycles: " + " ".join("(" + ",".join(f"q{v}" for v in c) + ")" for c in self.cycles))
        if self.loopbacks:
            out.append("loopbacks: " + ", ".join(f"q{v}" for v in self.loopbacks))
        if self.recovery:
            pairs = [f"q{g['source']}->q{t}" for g in self.recovery for t in g["targets"]]
            out.append("recovery: " + ", ".join(pairs))
        if self.r is not None:
            out.append(f"r: {self.r}")
        if self.depth is not None:
            out.append(f"depth: {self.depth}")
            out.append(f"gates: {self.gate_count}")
            out.append("layer widths: " + " ".join(map(str, self.layer_widths)))
        for c in self.checks:
            detail = f" ({c['detail']})" if c["detail"] else ""
            out.append(f"check {c['name']}: {c['verdict']}{detail}")
        return "\n".join(out) + "\n"


def _describe_map(report: Report, mf: MapFile) -> bool:
    cmap = mf.cmap
    report.ports = cmap.n
    violations = validate(cmap)
    report.valid = not violations
    for v in violations:
        if v.rule is Rule.OUTPUT_CONTENTION:
            requesters = [u for u, d in enumerate(cmap.dests) if d is not IDLE and v.port in d]
            line = mf.lines.get(max(requesters))
        else:
            line = mf.lines.get(v.port)
        report.violations.append({"rule": v.rule.value, "port": v.port, "detail": v.detail, "line": line})
    if violations:
        return False
    for sub in decompose(build_digraph(cmap)):
        report.components.append({"kind": sub.kind.value, "nodes": list(sub.nodes), "description": sub.describe()})
    return True


def _describe_plan(report: Report, p: PermutationPlan, c: Circuit) -> None:
    report.extensions = [str(e) for e in p.extensions]
    report.cut_edges = [list(e) for e in p.cut_edges]
    report.cycles = [list(cy) for cy in p.cycles]
    report.loopbacks = sorted(p.loopbacks)
    report.recovery = [{"source": g.source, "targets": list(g.targets)} for g in p.recovery]
    report.r = p.r
    _describe_circuit(report, c)


def _describe_circuit(report: Report, c: Circuit) -> None:
    st = stats(c)
    report.depth = st.depth
    report.gate_count = st.gate_count
    report.layer_widths = list(st.per_layer_widths)


def _emit(report: Report, fmt: str) -> None:
    sys.stdout.write(report.to_json() if fmt == "structured" else report.to_text())


def cmd_validate(args) -> int:
    mf = parse_map_text(_read(args.input))
    report = Report("validate")
    _describe_map(report, mf)
    _emit(report, args.format)
    return EXIT_OK if report.valid else EXIT_FAIL


def circuit_to_dict(c: Circuit) -> dict:
    return {"qubits": c.n, "layers": [[[g.control, g.target] for g in layer] for layer in c.layers]}


def cmd_compile(args) -> int:
    mf = parse_map_text(_read(args.input))
    report = Report("compile")
    if not _describe_map(report, mf):
        _emit(report, args.format)
        return EXIT_FAIL
    p = plan(mf.cmap)
    c = compile_plan(p)
    if args.emit == "circuit":
        text = json.dumps(circuit_to_dict(c), indent=2) + "\n" if args.format == "structured" else format_circuit(c)
    else:
        _describe_plan(report, p, c)
        text = report.to_json() if args.format == "structured" else report.to_text()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def verify_circuit(
    report: Report,
    cmap: ConnectionMap,
    c: Circuit,
    mode: str = "both",
    seed: int = 0,
    trials: int = 1000,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> None:
    """Append PASS/FAIL checks comparing ``c`` against ``cmap``'s delivery."""
    expected = PortPermutationMap.from_map(cmap)
    n = cmap.n
    rng = np.random.default_rng(seed)
    if c.n != n:
        report.add_check("width", False, f"circuit has {c.n} qubits, map has {n} ports")
        return
    if mode in ("bits", "both"):
        methods = ["onehot"] + (["exhaustive"] if n - len(idle_inlets(cmap)) <= 10 else [])
        for method in methods:
            try:
                got = extract_port_map(c, method, idle_inlets(cmap))
            except NotAPortMap as exc:
                report.add_check(f"port-map-{method}", False, f"NotAPortMap: {exc}")
                continue
            bad = expected.mismatches(got)
            report.add_check(f"port-map-{method}", not bad, f"outlets {bad} misrouted" if bad else "")
        failures = 0
        for _ in range(trials):
            bits = [int(b) if not cmap.is_idle(u) else 0 for u, b in enumerate(rng.integers(0, 2, n))]
            out = run_bits(c, bits)
            want = [bits[s] if s is not None else 0 for s in expected.out_source]
            failures += list(out) != want
        report.add_check("random-bits", failures == 0, f"{failures}/{trials} inputs misrouted" if failures else f"{trials} inputs")
    if mode in ("state", "both"):
        if n > max_qubits:
            report.add_check("state-vector", False, f"{n} qubits exceeds cap {max_qubits}")
            return
        agree = True
        count = min(trials, 1 << n)
        labels = range(1 << n) if count == 1 << n else rng.integers(0, 1 << n, count)
        for k in labels:
            bits = [(int(k) >> j) & 1 for j in range(n)]
            got = run_state(c, basis_state(bits, max_qubits), max_qubits)
            if not np.array_equal(got, basis_state(run_bits(c, bits), max_qubits)):
                agree = False
                break
        report.add_check("state-matches-bits", agree, f"{count} basis inputs")
        worst = 0.0
        for _ in range(min(trials, 20)):
            v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
            v /= np.sqrt(norm2(v))
            worst = max(worst, abs(norm2(run_state(c, v, max_qubits)) - norm2(v)))
        report.add_check("norm", worst <= TOL, f"max drift {worst:.1e}")
        if n <= 6:
            u = circuit_matrix(c)
            ok = is_permutation_matrix(u) and np.array_equal(u @ u.conj().T, np.eye(1 << n))
            report.add_check("unitary", ok, f"{1 << n}x{1 << n} permutation matrix" if ok else "")


def cmd_verify(args) -> int:
    report = Report("verify")
    if args.random is not None:
        rng = random.Random(args.seed)
        bad = 0
        worst_depth = 0
        for t in range(args.trials):
            cmap = random_connection_map(args.random, rng, unicast=args.unicast)
            p = plan(cmap)
            c = compile_plan(p)
            sub = Report("verify")
            verify_circuit(sub, cmap, c, args.mode, args.seed + t, trials=8, max_qubits=args.max_statevector_qubits)
            limit = 6 if cmap.is_unicast else 6 + rounds_needed(p.r)
            worst_depth = max(worst_depth, c.depth)
            if not sub.passed or c.depth > limit:
                bad += 1
        report.ports = args.random
        report.add_check("random-maps", bad == 0, f"{args.trials - bad}/{args.trials} maps verified, max depth {worst_depth}")
        _emit(report, args.format)
        return EXIT_OK if report.passed else EXIT_FAIL
    if args.input is None:
        raise MapFileError(0, "verify needs a map file or --random <ports>")
    mf = parse_map_text(_read(args.input))
    if not _describe_map(report, mf):
        _emit(report, args.format)
        return EXIT_FAIL
    p = plan(mf.cmap)
    if args.circuit:
        c = parse_circuit(_read(args.circuit))
        _describe_circuit(report, c)
    else:
        c = compile_plan(p)
        _describe_plan(report, p, c)
    verify_circuit(report, mf.cmap, c, args.mode, args.seed, args.trials, args.max_statevector_qubits)
    _emit(report, args.format)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_schedule(args) -> int:
    schedule = parse_schedule(_read(args.input))
    switch = Switch()
    outputs = switch.run_schedule(schedule)
    if args.format == "structured":
        doc = {
            "ports": schedule.n,
            "width": schedule.width,
            "slots": [
                {
                    "slot": o.slot,
                    "payload": [format(w, "x") for w in o.payload],
                    "sources": list(o.sources),
                    "valid": list(o.valid_mask),
                }
                for o in outputs
            ],
        }
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    elif outputs:
        sys.stdout.write(format_outputs(schedule.n, schedule.width, outputs))
    return EXIT_OK


def cmd_stats(args) -> int:
    text = _read(args.input)
    report = Report("stats")
    if text.startswith("QSWITCH-CIRCUIT"):
        c = parse_circuit(text)
        report.ports = c.n
        _describe_circuit(report, c)
    else:
        mf = parse_map_text(text)
        if not _describe_map(report, mf):
            _emit(report, args.format)
            return EXIT_FAIL
        p = plan(mf.cmap)
        _describe_plan(report, p, compile_plan(p))
    _emit(report, args.format)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qswitch", description="Compile and verify CN-gate switch circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_input: bool = True):
        if with_input:
            p.add_argument("input", help="input file, or - for stdin")
        p.add_argument("--format", choices=("text", "structured"), default="text")

    p = sub.add_parser("validate", help="check a connection map file")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="emit the reduction plan or the CN circuit")
    common(p)
    p.add_argument("--emit", choices=("plan", "circuit"), default="circuit")
    p.add_argument("-o", "--output", help="write to this file instead of stdout")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("verify", help="check a compiled circuit against its map")
    p.add_argument("input", nargs="?", help="map file")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--circuit", help="verify this circuit file instead of compiling one")
    p.add_argument("--mode", choices=("bits", "state", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-statevector-qubits", type=int, default=DEFAULT_MAX_QUBITS)
    p.add_argument("--random", type=int, metavar="PORTS", help="verify --trials random maps of this size")
    p.add_argument("--unicast", action="store_true", help="with --random: unicast maps only")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("schedule", help="replay a time-slotted schedule file")
    common(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("stats", help="depth and gate counts of a map or circuit file")
    common(p)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MapFileError, CircuitError, ScheduleError, SimulationError, OSError) as exc:
        if isinstance(exc, ScheduleError) and exc.line is None:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConnectionMapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
