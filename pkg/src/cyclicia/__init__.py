"""Coded distributed linear computation with interference alignment under cyclic assignment."""
from .assign import Assignment, AssignmentKind, cyclic_assignment, missing_set, repetition_assignment
from .fieldlin import MERSENNE31, PrimeField
from .model import (
    Regime,
    SystemParams,
    achievable_cost,
    benchmark_cost,
    compare,
    converse_cyclic,
    cost_report,
    repetition_cost,
    validate,
)
from .scheme import Mode, Scheme, build_scheme, decode, encode, load_scheme
from .sim import SimConfig, SimReport, run_repetition_scheme, run_simulation, sweep
from .verify import monte_carlo_failure, verify_all_active_sets, verify_end_to_end

__all__ = [
    "Assignment", "AssignmentKind", "MERSENNE31", "Mode", "PrimeField", "Regime", "Scheme",
    "SimConfig", "SimReport", "run_repetition_scheme", "run_simulation", "sweep",
    "SystemParams", "achievable_cost", "benchmark_cost", "build_scheme", "compare",
    "converse_cyclic", "cost_report", "cyclic_assignment", "decode", "encode", "load_scheme",
    "missing_set", "monte_carlo_failure", "repetition_assignment", "repetition_cost", "validate",
    "verify_all_active_sets", "verify_end_to_end",
]
