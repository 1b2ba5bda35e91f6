"""Transverse-field Ising model ``H = -sum_<ij> Z_i Z_j - g sum_i X_i``."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import torch

from .lattice import Lattice

PAULI = {
    "I": torch.eye(2, dtype=torch.float64),
    "X": torch.tensor([[0.0, 1.0], [1.0, 0.0]], dtype=torch.float64),
    "Z": torch.tensor([[1.0, 0.0], [0.0, -1.0]], dtype=torch.float64),
}

# Finite-size critical fields quoted for the two lattice families; only used as defaults.
G_CRITICAL = {"heavyhex": 1.5, "square": 2.6}

METHODS = ("su", "boundary", "statevector")


@dataclass(frozen=True)
class Term:
    coeff: float
    sites: tuple[int, ...]
    ops: tuple[str, ...]

    def operator_map(self) -> dict[int, torch.Tensor]:
        return {s: PAULI[o] for s, o in zip(self.sites, self.ops)}


@dataclass(frozen=True)
class TfimHamiltonian:
    lattice: Lattice
    g: float

    @cached_property
    def terms(self) -> tuple[Term, ...]:
        zz = tuple(Term(-1.0, e, ("Z", "Z")) for e in self.lattice.edges)
        x = tuple(Term(-self.g, (s,), ("X",)) for s in range(self.lattice.n_sites))
        return zz + x

    def to_dict(self) -> dict:
        return {"model": "tfim", "g": self.g}


def default_method(lattice: Lattice) -> str:
    return "boundary" if lattice.is_square() and lattice.rows > 1 else "su"


def energy(state_or_vector, H: TfimHamiltonian, method: str = "su", chi_e: int | None = None) -> torch.Tensor:
    """``sum_k c_k <P_k>`` under the chosen contraction; differentiable.

    ``state_or_vector`` is a :class:`PepsState` for ``su``/``boundary`` and a
    (possibly batched) amplitude tensor for ``statevector``.
    """
    from .peps import BoundaryContractor, PepsState, expectation_su
    from .statevector import tfim_energy

    if method == "statevector":
        if isinstance(state_or_vector, PepsState):
            raise ValueError("statevector method needs an amplitude vector, got a PEPS")
        return tfim_energy(state_or_vector, H.lattice, H.g)
    if not isinstance(state_or_vector, PepsState):
        raise ValueError(f"method {method!r} needs a PepsState")
    state = state_or_vector
    if method == "su":
        return _finite(sum(t.coeff * expectation_su(state, t.operator_map()) for t in H.terms if t.coeff != 0))
    if method == "boundary":
        if not H.lattice.is_square():
            raise ValueError(f"boundary-MPS energies need a square grid, got {H.lattice.name}")
        if chi_e is None:
            raise ValueError("boundary method needs chi_e")
        bc = BoundaryContractor.from_state(state, chi_e)
        cols = H.lattice.cols
        return _finite(sum(
            t.coeff * bc.expectation({divmod(s, cols): op for s, op in t.operator_map().items()})
            for t in H.terms
            if t.coeff != 0
        ))
    raise ValueError(f"unknown energy method {method!r}; expected one of {METHODS}")


def _finite(e: torch.Tensor) -> torch.Tensor:
    if not bool(torch.isfinite(e.detach()).all()):
        raise FloatingPointError("non-finite energy")
    return e


def relative_error(e: float, e_ref: float) -> float:
    if e_ref == 0:
        raise ValueError("relative error undefined for a zero reference energy")
    return abs(float(e) - float(e_ref)) / abs(float(e_ref))
