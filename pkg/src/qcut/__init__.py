"""Circuit cutting: partition a circuit, run the fragment variants in parallel, rebuild the expectation value."""

from .circuit import Circuit, CircuitDag, CircuitError, Gate, GateKind, gate, parse_circuit, serialize_circuit, to_dag
from .cutting import (CutError, CutKind, CutPlan, CutPoint, ReconstructionError, VariantJob, VariantResult,
                      apply_cuts, enumerate_variants, gate_cut_decomposition, reconstruct, wire_cut_decomposition)
from .execution import BackendDescriptor, BackendKind, ExecutionReport, UnroutableJobError, local_backend, submit
from .findcut import Constraints, InfeasibleError, find_cut, search
from .generators import generate_hea, generate_random, generate_rc
from .simulator import expectation, sample, simulate_statevector

__all__ = [
    "BackendDescriptor", "BackendKind", "Circuit", "CircuitDag", "CircuitError", "Constraints", "CutError",
    "CutKind", "CutPlan", "CutPoint", "ExecutionReport", "Gate", "GateKind", "InfeasibleError",
    "ReconstructionError", "UnroutableJobError", "VariantJob", "VariantResult", "apply_cuts",
    "enumerate_variants", "expectation", "find_cut", "gate", "gate_cut_decomposition", "generate_hea",
    "generate_random", "generate_rc", "local_backend", "parse_circuit", "reconstruct", "sample", "search",
    "serialize_circuit", "simulate_statevector", "submit", "to_dag", "wire_cut_decomposition",
]
