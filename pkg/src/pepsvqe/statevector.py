"""Exact real statevector simulation for small lattices.

Qubit ``q`` is bit ``q`` of the basis index (little-endian), i.e. axis
``N - 1 - q`` of the ``(2,) * N`` view. States may carry a leading batch
axis; all routines are differentiable through torch.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse.linalg
import torch

from .circuit import CircuitSpec
from .lattice import Lattice
from .tensor import as_tensor

MAX_QUBITS = 26
MAX_LANCZOS_QUBITS = 20


class TooManyQubits(ValueError):
    pass


def product_state(n: int, local=(1.0, 0.0)) -> torch.Tensor:
    local = as_tensor(local)
    if abs(float(local.norm()) - 1.0) > 1e-12:
        raise ValueError("local state must be normalised")
    psi = torch.ones(1, dtype=local.dtype)
    for _ in range(n):
        psi = torch.kron(local, psi)
    return psi


def _axis(n: int, q: int) -> int:
    return n - 1 - q


def apply_two_qubit(psi: torch.Tensor, gate: torch.Tensor, i: int, j: int, n: int) -> torch.Tensor:
    """Apply ``gate`` (``(4,4)`` or batched ``(B,4,4)``) on qubits ``i, j``; ``i`` is the first factor."""
    batch = psi.shape[:-1]
    ai, aj = _axis(n, i), _axis(n, j)
    lo, hi = sorted((ai, aj))
    t = psi.reshape(*batch, 1 << lo, 2, 1 << (hi - lo - 1), 2, 1 << (n - hi - 1))
    g = gate.reshape(*gate.shape[:-2], 2, 2, 2, 2)
    # x, z index the qubit on the lower axis; y, w the higher one
    spec = "...xyzw,...azbwc->...axbyc" if ai == lo else "...yxwz,...azbwc->...axbyc"
    return torch.einsum(spec, g, t).reshape(*batch, -1)


def run_circuit(spec: CircuitSpec, theta, initial: torch.Tensor | None = None) -> torch.Tensor:
    """Statevector after the brickwall circuit.

    ``theta`` may be ``(n_params,)`` or batched ``(B, n_params)``; the result
    is ``(2**N,)`` or ``(B, 2**N)`` accordingly. Default initial state is
    ``|0...0>``.
    """
    n = spec.lattice.n_sites
    if n > MAX_QUBITS:
        raise TooManyQubits(f"{n} qubits exceeds statevector cap of {MAX_QUBITS}")
    theta = as_tensor(theta)
    gates = spec.gates(theta)  # (..., n_slots, 4, 4)
    psi = product_state(n) if initial is None else as_tensor(initial)
    if theta.ndim == 2:
        psi = psi.expand(theta.shape[0], -1)
    for k, slot in enumerate(spec.gate_slots):
        i, j = slot.edge
        psi = apply_two_qubit(psi, gates[..., k, :, :], i, j, n)
    return psi


def z_signs(n: int) -> np.ndarray:
    """``(n, 2**n)`` array of Z eigenvalues per qubit."""
    idx = np.arange(2**n)
    return np.array([1 - 2 * ((idx >> q) & 1) for q in range(n)], dtype=float)


def zz_diagonal(lattice: Lattice) -> np.ndarray:
    z = z_signs(lattice.n_sites)
    out = np.zeros(2**lattice.n_sites)
    for i, j in lattice.edges:
        out += z[i] * z[j]
    return out


def x_expectations(psi: torch.Tensor, n: int) -> torch.Tensor:
    """``<X_q>`` for every qubit, shape ``(..., n)``; assumes a real normalised state."""
    batch = psi.shape[:-1]
    t = psi.reshape(*batch, *([2] * n))
    off = len(batch)
    vals = [(t * t.flip(off + _axis(n, q))).reshape(*batch, -1).sum(-1) for q in range(n)]
    return torch.stack(vals, dim=-1)


def zz_expectations(psi: torch.Tensor, lattice: Lattice) -> torch.Tensor:
    z = torch.from_numpy(z_signs(lattice.n_sites))
    p = psi * psi
    return torch.stack([(p * (z[i] * z[j])).sum(-1) for i, j in lattice.edges], dim=-1)


def tfim_energy(psi: torch.Tensor, lattice: Lattice, g: float) -> torch.Tensor:
    """``<psi|H|psi>`` for a normalised real state (batched over leading axes)."""
    diag = torch.from_numpy(zz_diagonal(lattice))
    e_zz = -((psi * psi) * diag).sum(-1)
    if g == 0:
        return e_zz
    return e_zz - g * x_expectations(psi, lattice.n_sites).sum(-1)


def apply_tfim(v: np.ndarray, lattice: Lattice, g: float, diag: np.ndarray | None = None) -> np.ndarray:
    """Matrix-free ``H v`` (numpy)."""
    n = lattice.n_sites
    if diag is None:
        diag = zz_diagonal(lattice)
    out = -diag * v
    if g:
        idx = np.arange(2**n)
        for q in range(n):
            out -= g * v[idx ^ (1 << q)]
    return out


def tfim_dense(lattice: Lattice, g: float) -> np.ndarray:
    """Dense Hamiltonian matrix (small N only; used as an oracle)."""
    n = lattice.n_sites
    dim = 2**n
    h = np.diag(-zz_diagonal(lattice))
    idx = np.arange(dim)
    for q in range(n):
        h[idx, idx ^ (1 << q)] -= g
    return h


def exact_ground_energy(lattice: Lattice, g: float, tol: float = 1e-12) -> float:
    """Lowest eigenvalue of the TFIM via Lanczos on the matrix-free product."""
    n = lattice.n_sites
    if n > MAX_LANCZOS_QUBITS:
        raise TooManyQubits(f"{n} qubits exceeds Lanczos cap of {MAX_LANCZOS_QUBITS}")
    if g == 0:
        return -float(len(lattice.edges))
    dim = 2**n
    if dim <= 64:
        return float(np.linalg.eigvalsh(tfim_dense(lattice, g))[0])
    diag = zz_diagonal(lattice)
    op = scipy.sparse.linalg.LinearOperator((dim, dim), matvec=lambda v: apply_tfim(v, lattice, g, diag), dtype=float)
    v0 = np.ones(dim) / np.sqrt(dim)
    try:
        vals = scipy.sparse.linalg.eigsh(op, k=1, which="SA", v0=v0, tol=tol, maxiter=20 * dim)[0]
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise RuntimeError(f"Lanczos did not converge: {exc}") from None
    return float(vals[0])


def spectral_norm(lattice: Lattice, g: float) -> float:
    """``max |eigenvalue|`` of the TFIM (Lanczos on both spectral ends)."""
    if lattice.n_sites <= 6:
        w = np.linalg.eigvalsh(tfim_dense(lattice, g))
        return float(max(abs(w[0]), abs(w[-1])))
    dim = 2**lattice.n_sites
    diag = zz_diagonal(lattice)
    op = scipy.sparse.linalg.LinearOperator((dim, dim), matvec=lambda v: apply_tfim(v, lattice, g, diag), dtype=float)
    v0 = np.ones(dim) / np.sqrt(dim)
    vals = scipy.sparse.linalg.eigsh(op, k=1, which="LM", v0=v0, tol=1e-10)[0]
    return float(abs(vals[0]))
