"""Simple-update gate application, regauging and SU-style expectation values."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import torch
from torch.utils.checkpoint import checkpoint

from ..circuit import CircuitSpec
from ..lattice import Edge
from ..tensor import SVD_CUTOFF, as_tensor, einsum2, svd_truncate
from .state import PepsState, scale_axis, weight_power

log = logging.getLogger(__name__)

_EYE4 = torch.eye(4, dtype=torch.float64)


@dataclass
class EvolutionLog:
    discarded: list[float] = field(default_factory=list)
    layer_times: list[float] = field(default_factory=list)
    pinv_clipped: int = 0

    @property
    def cumulative_truncation(self) -> float:
        return float(sum(self.discarded))

    def merge(self, other: "EvolutionLog") -> None:
        self.discarded += other.discarded
        self.layer_times += other.layer_times
        self.pinv_clipped += other.pinv_clipped


def _tracks_grad(*ts: torch.Tensor) -> bool:
    return torch.is_grad_enabled() and any(t.requires_grad for t in ts)


def _renormalise(t: torch.Tensor) -> tuple[torch.Tensor, float]:
    scale = t.detach().abs().max()
    s = float(scale)
    if s == 0.0 or not math.isfinite(s):
        return t, 0.0
    return t / scale, math.log(s)


def _split_off_env(t: torch.Tensor) -> tuple[torch.Tensor | None, torch.Tensor]:
    """Reduce ``(env..., p, b)`` to an isometry ``q`` and a core ``(r, p, b)``.

    Only done when it actually shrinks the tensor. The QR route is used
    outside autograd; under autograd the full tensor is kept so that the
    SVD adjoint is the only decomposition being differentiated.
    """
    env = int(np.prod(t.shape[:-2], dtype=np.int64))
    p, b = t.shape[-2], t.shape[-1]
    mat = t.reshape(env, p * b)
    if env > p * b and not _tracks_grad(t):
        q, r = torch.linalg.qr(mat)
        return q, r.reshape(-1, p, b)
    return None, mat.reshape(env, p, b)


def apply_gate_su(
    state: PepsState,
    edge: Edge,
    gate,
    chi: int,
    cutoff: float = SVD_CUTOFF,
) -> tuple[PepsState, float]:
    """One simple-update step of a two-site operator on ``edge``.

    ``gate`` is a 4x4 matrix acting on ``|a_i a_j>`` with ``i < j`` the
    first factor. Returns the new state and the discarded weight.
    """
    i, j = edge
    if i > j:
        raise ValueError(f"edges are ordered pairs (i < j), got {edge}")
    if edge not in state.weights:
        raise ValueError(f"{edge} is not an edge of {state.lattice.name}")
    gate = as_tensor(gate).reshape(2, 2, 2, 2)
    ai, bj = state.axis(i, edge), state.axis(j, edge)
    lam = state.weights[edge]

    a = state.absorbed(i, exclude=edge).movedim(ai, -1).movedim(0, -2)  # (envA..., p, b)
    a = a * lam
    b = state.absorbed(j, exclude=edge).movedim(bj, 0).movedim(1, -1)  # (b, envB..., q)
    b = b.movedim(0, -1)  # (envB..., q, b)
    env_a, env_b = a.shape[:-2], b.shape[:-2]

    qa, ca = _split_off_env(a)
    qb, cb = _split_off_env(b)
    theta = einsum2("xpb,yqb->xpqy", ca, cb)
    theta = einsum2("xpqy,stpq->xsty", theta, gate)
    res = svd_truncate(theta, 2, chi, cutoff)
    s = res.weights
    norm = s.detach().norm()
    new_lam = s / norm

    left = res.left  # (ra, p, k)
    right = res.right.movedim(0, -1).movedim(0, 1)  # (rb, q, k)
    k = left.shape[-1]
    if qa is not None:
        left = (qa @ left.reshape(qa.shape[1], -1)).reshape(-1, 2, k)
    if qb is not None:
        right = (qb @ right.reshape(qb.shape[1], -1)).reshape(-1, 2, k)
    left = left.reshape(*env_a, 2, k).movedim(-2, 0).movedim(-1, ai)
    right = right.reshape(*env_b, 2, k).movedim(-2, 0).movedim(-1, bj)

    new = state.copy()
    for site, t in ((i, left), (j, right)):
        for e in state.lattice.incident_edges(site):
            if e != edge:
                t = scale_axis(t, state.axis(site, e), weight_power(state.weights[e], -1, cutoff))
        t, lg = _renormalise(t)
        new.tensors[site] = t
        new.log_norm += lg
    new.weights[edge] = new_lam
    new.log_norm += math.log(float(norm))
    return new, res.discarded_weight


def su_regauge(state: PepsState, groups, chi: int, cutoff: float = SVD_CUTOFF) -> tuple[PepsState, list[float]]:
    """Identity gates over ``groups`` in reverse order (edges reversed too)."""
    discarded = []
    for group in reversed(groups):
        for edge in reversed(sorted(group)):
            state, dw = apply_gate_su(state, edge, _EYE4, chi, cutoff)
            discarded.append(dw)
    return state, discarded


def _apply_layer(state, spec: CircuitSpec, gates, layer: int, chi, regauge, cutoff, elog: EvolutionLog | None):
    slots = spec.layer_slots(layer)
    for k, slot_index in enumerate(slots):
        slot = spec.gate_slots[slot_index]
        state, dw = apply_gate_su(state, slot.edge, gates[k], chi, cutoff)
        if elog is not None:
            elog.discarded.append(dw)
    if regauge and chi > 1:
        state, _ = su_regauge(state, spec.lattice.groups, chi, cutoff)
    return state


def apply_circuit(
    state0: PepsState,
    spec: CircuitSpec,
    theta,
    chi: int,
    regauge: bool = True,
    cutoff: float = SVD_CUTOFF,
    checkpoint_layers: bool = False,
) -> tuple[PepsState, EvolutionLog]:
    """Run the brickwall circuit gate by gate; optionally regauge after each layer.

    With ``checkpoint_layers`` the autograd graph keeps only per-layer
    boundaries and recomputes the inside of a layer during the backward pass.
    """
    if spec.lattice is not state0.lattice and spec.lattice != state0.lattice:
        raise ValueError("circuit and state live on different lattices")
    gates = spec.gates(theta)
    elog = EvolutionLog()
    state = state0
    edges = spec.lattice.edges
    n_sites = spec.lattice.n_sites
    for layer in range(spec.depth):
        t0 = time.perf_counter()
        layer_gates = gates[spec.layer_slots(layer).start: spec.layer_slots(layer).stop]
        if checkpoint_layers and _tracks_grad(layer_gates):
            recorded = EvolutionLog()
            first = [True]
            base = state

            def run(*flat):
                st = base.copy()
                st.tensors = list(flat[:n_sites])
                st.weights = dict(zip(edges, flat[n_sites: n_sites + len(edges)]))
                g = flat[-1]
                st = _apply_layer(st, spec, g, layer, chi, regauge, cutoff, recorded if first[0] else None)
                first[0] = False
                return (*st.tensors, *(st.weights[e] for e in edges), torch.tensor(st.log_norm))

            out = checkpoint(run, *state.tensors, *(state.weights[e] for e in edges), layer_gates, use_reentrant=False)
            state = state.copy()
            state.tensors = list(out[:n_sites])
            state.weights = dict(zip(edges, out[n_sites: n_sites + len(edges)]))
            state.log_norm = float(out[-1])
            elog.discarded += recorded.discarded
        else:
            state = _apply_layer(state, spec, layer_gates, layer, chi, regauge, cutoff, elog)
        elog.layer_times.append(time.perf_counter() - t0)
    return state, elog


def _site_ops(ops: Mapping[int, object]) -> dict[int, torch.Tensor]:
    return {int(s): as_tensor(o) for s, o in ops.items()}


def _apply_op(op: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
    return torch.tensordot(op, t, dims=([1], [0]))


def expectation_su(state: PepsState, ops: Mapping[int, object]) -> torch.Tensor:
    """Mean-field-environment expectation of a one- or two-site product operator.

    ``ops`` maps site -> 2x2 matrix. Every dangling virtual axis is closed
    with its squared weights; for two sites the pair must share an edge.
    """
    ops = _site_ops(ops)
    lat = state.lattice
    if len(ops) == 1:
        (s, op), = ops.items()
        t = state.absorbed(s)
        return (t * _apply_op(op, t)).sum() / (t * t).sum()
    if len(ops) != 2:
        raise ValueError("SU expectation supports one- or two-site operators")
    i, j = sorted(ops)
    edge = (i, j)
    if edge not in state.weights:
        raise ValueError(f"sites {i} and {j} are not adjacent on {lat.name}")
    a = state.absorbed(i, exclude=edge).movedim(state.axis(i, edge), -1).movedim(0, -2)
    a = a * state.weights[edge]
    b = state.absorbed(j, exclude=edge).movedim(state.axis(j, edge), -1).movedim(0, -2)
    _, ca = _split_off_env(a)  # isometries drop out of <theta|O|theta>
    _, cb = _split_off_env(b)
    theta = einsum2("xpb,yqb->xpqy", ca, cb)
    otheta = torch.tensordot(ops[i], theta, dims=([1], [1])).movedim(0, 1)
    otheta = torch.tensordot(ops[j], otheta, dims=([1], [2])).movedim(0, 2)
    return (theta * otheta).sum() / (theta * theta).sum()
