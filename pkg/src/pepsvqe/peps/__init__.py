"""PEPS states, simple update, boundary-MPS contraction and imaginary-time evolution."""

from .boundary import BoundaryContractor, absorb_row, expectation_boundary_mps, grid_tensors
from .ite import DEFAULT_SCHEDULE, IteResult, imaginary_time_evolve
from .simple_update import EvolutionLog, apply_circuit, apply_gate_su, expectation_su, su_regauge
from .state import PLUS, ZERO, PepsState, init_product_state, load_state, save_state, scale_axis, to_statevector

__all__ = [
    "BoundaryContractor",
    "DEFAULT_SCHEDULE",
    "EvolutionLog",
    "IteResult",
    "PLUS",
    "PepsState",
    "ZERO",
    "absorb_row",
    "apply_circuit",
    "apply_gate_su",
    "expectation_boundary_mps",
    "expectation_su",
    "grid_tensors",
    "imaginary_time_evolve",
    "init_product_state",
    "load_state",
    "save_state",
    "scale_axis",
    "su_regauge",
    "to_statevector",
]
