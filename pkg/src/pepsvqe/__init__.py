"""Tensor-network (PEPS) simulation of variational SO(4) brickwall circuits for the transverse-field Ising model."""

from .circuit import CircuitSpec, build_circuit, load_params, save_params, warm_start_extend
from .hamiltonian import TfimHamiltonian, energy, relative_error
from .lattice import Lattice, build_heavyhex, build_square, parse_lattice
from .optimize import Evaluator, OptimizationTrace, gradient, minimize, optimize_sweep
from .statevector import exact_ground_energy, run_circuit

__all__ = [
    "CircuitSpec",
    "Evaluator",
    "Lattice",
    "OptimizationTrace",
    "TfimHamiltonian",
    "build_circuit",
    "build_heavyhex",
    "build_square",
    "energy",
    "exact_ground_energy",
    "gradient",
    "load_params",
    "minimize",
    "optimize_sweep",
    "parse_lattice",
    "relative_error",
    "run_circuit",
    "save_params",
    "warm_start_extend",
]
