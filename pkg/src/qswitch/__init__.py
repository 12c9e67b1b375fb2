"""Compile switch connection maps into layered CN-gate circuits and verify them."""

from .digraph import (
    IDLE,
    ConnectionDigraph,
    ConnectionMap,
    ConnectionMapError,
    Kind,
    SubDigraph,
    build_digraph,
    classify,
    decompose,
    validate,
)
from .planner import PermutationPlan, plan, recovery_rounds
from .qcircuit import Circuit, CnGate, Layer, compile_plan, cycle_xy, format_circuit, parse_circuit
from .qsim import extract_port_map, run_bits, run_state

__all__ = [
    "IDLE",
    "Circuit",
    "CnGate",
    "ConnectionDigraph",
    "ConnectionMap",
    "ConnectionMapError",
    "Kind",
    "Layer",
    "PermutationPlan",
    "SubDigraph",
    "build_digraph",
    "classify",
    "compile_plan",
    "cycle_xy",
    "decompose",
    "extract_port_map",
    "format_circuit",
    "parse_circuit",
    "plan",
    "recovery_rounds",
    "run_bits",
    "run_state",
    "validate",
]
