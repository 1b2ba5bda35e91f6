"""SO(4) brickwall ansatz.

A gate is ``expm(sum_k angles[k] * G_k)`` over the antisymmetric basis
``E01, E02, E03, E12, E13, E23`` (``Eij = e_i e_j^T - e_j e_i^T``), so zero
angles give the identity. Gates act on ``|a_i a_j>`` with the lower site
index ``i`` as the first tensor factor (row index ``2*a_i + a_j``).

A layer is one pass over every brickwall group of the lattice, so each edge
receives exactly one gate per layer. Parameters are laid out slot by slot
(layer-major, then group, then edge) with six angles per slot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg
import torch

from .lattice import Edge, Lattice
from .tensor import as_tensor

SLOT_ORDER_VERSION = 1
N_ANGLES = 6
_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _generators() -> np.ndarray:
    gens = np.zeros((N_ANGLES, 4, 4))
    for k, (i, j) in enumerate(_PAIRS):
        gens[k, i, j] = 1.0
        gens[k, j, i] = -1.0
    return gens


GENERATORS = _generators()
_GENERATORS_T = torch.from_numpy(GENERATORS)


def so4_matrix(angles) -> np.ndarray:
    """4x4 rotation for one set of six angles (numpy)."""
    a = np.asarray(angles, dtype=float)
    if a.shape != (N_ANGLES,):
        raise ValueError(f"expected 6 angles, got shape {a.shape}")
    return scipy.linalg.expm(np.tensordot(a, GENERATORS, axes=1))


def so4_matrices(angles: torch.Tensor) -> torch.Tensor:
    """Batched, differentiable version: ``(..., 6) -> (..., 4, 4)``."""
    angles = as_tensor(angles)
    gen = torch.tensordot(angles, _GENERATORS_T, dims=1)
    return torch.linalg.matrix_exp(gen)


def so4_derivatives(angles) -> np.ndarray:
    """``dM/dangle_k`` for k = 0..5, stacked as ``(6, 4, 4)``.

    Uses the Frechet derivative of the matrix exponential in each generator
    direction.
    """
    a = np.asarray(angles, dtype=float)
    gen = np.tensordot(a, GENERATORS, axes=1)
    return np.stack([scipy.linalg.expm_frechet(gen, g, compute_expm=False) for g in GENERATORS])


@dataclass(frozen=True)
class GateSlot:
    layer: int
    group: int
    edge: Edge


@dataclass(frozen=True)
class CircuitSpec:
    lattice: Lattice
    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("circuit depth must be >= 1")

    @cached_property
    def gate_slots(self) -> tuple[GateSlot, ...]:
        return tuple(
            GateSlot(layer, gi, edge)
            for layer in range(self.depth)
            for gi, group in enumerate(self.lattice.groups)
            for edge in sorted(group)
        )

    @property
    def gates_per_layer(self) -> int:
        return len(self.lattice.edges)

    @property
    def n_params(self) -> int:
        return N_ANGLES * len(self.gate_slots)

    def slot_params(self, slot_index: int) -> slice:
        return slice(N_ANGLES * slot_index, N_ANGLES * (slot_index + 1))

    def param_slot(self, param_index: int) -> int:
        return param_index // N_ANGLES

    def layer_slots(self, layer: int) -> range:
        n = self.gates_per_layer
        return range(layer * n, (layer + 1) * n)

    def gates(self, theta) -> torch.Tensor:
        """All gate matrices, ``(n_slots, 4, 4)``, differentiable in ``theta``."""
        theta = as_tensor(theta)
        if theta.shape[-1] != self.n_params:
            raise ValueError(f"theta has {theta.shape[-1]} entries, circuit needs {self.n_params}")
        return so4_matrices(theta.reshape(*theta.shape[:-1], len(self.gate_slots), N_ANGLES))

    def header(self) -> dict:
        return {
            "lattice": self.lattice.name,
            "depth": self.depth,
            "slot_order_version": SLOT_ORDER_VERSION,
            "n_params": self.n_params,
        }


def build_circuit(lattice: Lattice, depth: int) -> CircuitSpec:
    return CircuitSpec(lattice, depth)


def warm_start_extend(theta_opt, spec_opt: CircuitSpec, spec_full: CircuitSpec) -> np.ndarray:
    """Embed optimised shallow parameters into a deeper circuit; extra layers are identity."""
    if spec_opt.lattice != spec_full.lattice:
        raise ValueError("warm start lattice does not match the target circuit")
    if spec_opt.depth > spec_full.depth:
        raise ValueError(f"warm start depth {spec_opt.depth} exceeds target depth {spec_full.depth}")
    theta_opt = np.asarray(theta_opt, dtype=float)
    if theta_opt.shape != (spec_opt.n_params,):
        raise ValueError(f"theta_opt has shape {theta_opt.shape}, expected ({spec_opt.n_params},)")
    out = np.zeros(spec_full.n_params)
    out[: spec_opt.n_params] = theta_opt
    return out


def save_params(path, spec: CircuitSpec, theta, **extra) -> None:
    """Checkpoint format: JSON header plus the flat angle array."""
    doc = dict(spec.header(), **extra, values=[float(x) for x in np.asarray(theta).ravel()])
    Path(path).write_text(json.dumps(doc, indent=1))


def load_params(path, lattice: Lattice | None = None) -> tuple[CircuitSpec, np.ndarray, dict]:
    from .lattice import parse_lattice

    doc = json.loads(Path(path).read_text())
    if doc.get("slot_order_version") != SLOT_ORDER_VERSION:
        raise ValueError(f"{path}: unsupported slot order version {doc.get('slot_order_version')}")
    lat = lattice if lattice is not None else parse_lattice(doc["lattice"])
    if lat.name != doc["lattice"]:
        raise ValueError(f"{path}: checkpoint is for {doc['lattice']}, not {lat.name}")
    spec = CircuitSpec(lat, int(doc["depth"]))
    theta = np.asarray(doc["values"], dtype=float)
    if theta.shape != (spec.n_params,):
        raise ValueError(f"{path}: expected {spec.n_params} values, found {theta.size}")
    return spec, theta, doc
