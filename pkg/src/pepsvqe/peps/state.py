"""PEPS container in the simple-update (Vidal-like) gauge."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..lattice import Edge, Lattice
from ..tensor import DTYPE, SVD_CUTOFF, as_tensor

ZERO = (1.0, 0.0)
PLUS = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
LOCAL_STATES = {"zero": ZERO, "plus": PLUS}


@dataclass
class PepsState:
    """One tensor per site plus a weight vector per edge.

    ``tensors[i]`` has the physical axis first (size 2) followed by one
    virtual axis per incident edge, ordered like
    ``lattice.incident_edges(i)``. The physical state is the contraction of
    all site tensors with each ``weights[e]`` inserted once on its bond.
    ``log_norm`` accumulates the scale factors stripped by per-gate
    renormalisation.
    """

    lattice: Lattice
    tensors: list[torch.Tensor]
    weights: dict[Edge, torch.Tensor]
    log_norm: float = 0.0
    axes: dict[tuple[int, Edge], int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.axes:
            for s in range(self.lattice.n_sites):
                for k, e in enumerate(self.lattice.incident_edges(s)):
                    self.axes[(s, e)] = k + 1

    def axis(self, site: int, edge: Edge) -> int:
        return self.axes[(site, edge)]

    def copy(self) -> "PepsState":
        return PepsState(self.lattice, list(self.tensors), dict(self.weights), self.log_norm, self.axes)

    def bond_dim(self, edge: Edge) -> int:
        return int(self.weights[edge].shape[0])

    @property
    def max_bond(self) -> int:
        return max((self.bond_dim(e) for e in self.lattice.edges), default=1)

    def absorbed(self, site: int, power: float = 1.0, exclude: Edge | None = None) -> torch.Tensor:
        """Site tensor with ``weights**power`` multiplied onto its virtual axes."""
        t = self.tensors[site]
        for e in self.lattice.incident_edges(site):
            if e == exclude:
                continue
            t = scale_axis(t, self.axis(site, e), weight_power(self.weights[e], power))
        return t

    def check(self) -> list[str]:
        problems = []
        for s in range(self.lattice.n_sites):
            t = self.tensors[s]
            if t.shape[0] != 2:
                problems.append(f"site {s}: physical dimension {t.shape[0]}")
            for e in self.lattice.incident_edges(s):
                if t.shape[self.axis(s, e)] != self.bond_dim(e):
                    problems.append(f"site {s}: axis for {e} mismatches weight length")
        for e, w in self.weights.items():
            w = w.detach()
            if bool((w <= 0).any()):
                problems.append(f"edge {e}: non-positive weights")
            if w.numel() > 1 and bool((w[1:] > w[:-1] * (1 + 1e-12)).any()):
                problems.append(f"edge {e}: weights not sorted")
        return problems


def scale_axis(t: torch.Tensor, axis: int, w: torch.Tensor) -> torch.Tensor:
    shape = [1] * t.ndim
    shape[axis] = w.shape[0]
    return t * w.reshape(shape)


def weight_power(w: torch.Tensor, power: float, cutoff: float = SVD_CUTOFF) -> torch.Tensor:
    """``w**power``; for negative powers entries ``<= cutoff * max`` map to 0 (pseudo-inverse)."""
    if power == 1:
        return w
    if power > 0:
        return w**power
    keep = w > cutoff * w.max()
    safe = torch.where(keep, w, torch.ones_like(w))
    return torch.where(keep, safe**power, torch.zeros_like(w))


def init_product_state(lattice: Lattice, local=ZERO) -> PepsState:
    """Product state ``local^{otimes N}`` with all bonds of dimension 1."""
    if isinstance(local, str):
        local = LOCAL_STATES[local]
    v = as_tensor(local)
    if v.shape != (2,) or abs(float(v.norm()) - 1.0) > 1e-12:
        raise ValueError(f"local state must be a normalised 2-vector, got {local!r}")
    tensors = []
    for s in range(lattice.n_sites):
        deg = len(lattice.neighbors(s))
        tensors.append(v.reshape((2,) + (1,) * deg).clone())
    weights = {e: torch.ones(1, dtype=DTYPE) for e in lattice.edges}
    return PepsState(lattice, tensors, weights)


def to_statevector(state: PepsState, normalise: bool = True) -> torch.Tensor:
    """Exact contraction to amplitudes (little-endian, qubit ``q`` on axis ``N-1-q``); small N only."""
    lat = state.lattice
    n = lat.n_sites
    if n > 20:
        raise ValueError(f"exact contraction of {n} sites is not supported")
    # running tensor: physical axes of visited sites (in visit order), then open bonds
    acc = torch.ones((), dtype=DTYPE)
    open_edges: list[Edge] = []
    for s in range(n):
        t = state.tensors[s]
        for e in lat.incident_edges(s):
            if e[0] == s:  # weight attached once, on the lower site
                t = scale_axis(t, state.axis(s, e), state.weights[e])
        inc = lat.incident_edges(s)
        shared = [e for e in inc if e in open_edges]
        a_axes = [s + open_edges.index(e) for e in shared]
        b_axes = [state.axis(s, e) for e in shared]
        acc = torch.tensordot(acc, t, dims=(a_axes, b_axes))
        # result: acc free axes (phys 0..s-1, remaining open edges), then t free axes (phys, new edges)
        remaining = [e for e in open_edges if e not in shared]
        new = [e for e in inc if e not in shared]
        k = s + len(remaining)
        acc = acc.movedim(k, s)  # physical axis of site s follows the earlier ones
        open_edges = remaining + new
    psi = acc.reshape(*([2] * n)).permute(*reversed(range(n))).reshape(-1)
    return psi / psi.norm() if normalise else psi


def save_state(state: PepsState, path, chi: int | None = None) -> None:
    """Binary container (``.npz``) with a JSON sidecar next to it."""
    path = Path(path)
    arrays = {f"site_{s}": t.detach().numpy() for s, t in enumerate(state.tensors)}
    arrays.update({f"bond_{i}_{j}": w.detach().numpy() for (i, j), w in state.weights.items()})
    np.savez(path.with_suffix(".npz"), **arrays)
    meta = {"lattice": state.lattice.name, "chi": chi, "log_norm": state.log_norm, "max_bond": state.max_bond}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=1))


def load_state(path, lattice: Lattice) -> PepsState:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta["lattice"] != lattice.name:
        raise ValueError(f"state was saved for {meta['lattice']}, not {lattice.name}")
    with np.load(path.with_suffix(".npz")) as data:
        tensors = [torch.from_numpy(data[f"site_{s}"].copy()) for s in range(lattice.n_sites)]
        weights = {(i, j): torch.from_numpy(data[f"bond_{i}_{j}"].copy()) for i, j in lattice.edges}
    return PepsState(lattice, tensors, weights, float(meta["log_norm"]))
