"""Dense real tensor kernels.

Everything is real ``float64``: SO(4) gates, the TFIM Hamiltonian in the
computational basis and the product initial states are all real, so no
complex storage is needed. Tensors are plain :class:`torch.Tensor` objects
so the same kernels serve the forward simulation and reverse-mode
differentiation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import torch

DTYPE = torch.float64
SVD_CUTOFF = 1e-12
# Lorentzian broadening of 1/(s_j^2 - s_i^2) in the SVD adjoint, relative to s_max^2.
SVD_GAP_EPS = 1e-16


class KernelError(RuntimeError):
    """A tensor kernel failed (non-finite output, SVD non-convergence)."""


def as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x if x.dtype == DTYPE else x.to(DTYPE)
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


def set_single_threaded() -> None:
    """Pin torch intra-op parallelism to one thread (timing mode)."""
    torch.set_num_threads(1)


def _check_finite(t: torch.Tensor, what: str) -> torch.Tensor:
    if not bool(torch.isfinite(t).all()):
        raise KernelError(f"non-finite entries after {what}")
    return t


def permute(t: torch.Tensor, perm: Sequence[int]) -> torch.Tensor:
    perm = list(perm)
    if sorted(perm) != list(range(t.ndim)):
        raise ValueError(f"invalid permutation {perm} for a rank-{t.ndim} tensor")
    return t.permute(*perm)


def reshape(t: torch.Tensor, shape: Sequence[int]) -> torch.Tensor:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape, dtype=np.int64)) != t.numel():
        raise ValueError(f"cannot reshape {tuple(t.shape)} into {shape}")
    return t.reshape(shape)


def contract(a: torch.Tensor, b: torch.Tensor, axes_a: Sequence[int], axes_b: Sequence[int]) -> torch.Tensor:
    """Pairwise contraction: free axes of ``a`` followed by free axes of ``b``.

    Realised as permute -> reshape -> matmul.
    """
    axes_a = [ax % a.ndim for ax in axes_a]
    axes_b = [ax % b.ndim for ax in axes_b]
    if len(axes_a) != len(axes_b):
        raise ValueError("axes_a and axes_b must have the same length")
    for i, j in zip(axes_a, axes_b):
        if a.shape[i] != b.shape[j]:
            raise ValueError(f"shape mismatch: a axis {i} ({a.shape[i]}) vs b axis {j} ({b.shape[j]})")
    free_a = [i for i in range(a.ndim) if i not in axes_a]
    free_b = [j for j in range(b.ndim) if j not in axes_b]
    shape_a = [a.shape[i] for i in free_a]
    shape_b = [b.shape[j] for j in free_b]
    k = int(np.prod([a.shape[i] for i in axes_a], dtype=np.int64))
    am = a.permute(*free_a, *axes_a).reshape(-1, k)
    bm = b.permute(*axes_b, *free_b).reshape(k, -1)
    # no finiteness scan here: it cost a third of a boundary contraction; callers check results
    return (am @ bm).reshape(shape_a + shape_b)


_SPEC = re.compile(r"^\s*([A-Za-z]*)\s*,\s*([A-Za-z]*)\s*->\s*([A-Za-z]*)\s*$")


def einsum2(spec: str, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Two-operand einsum (``"abc,cd->abd"``) routed through :func:`contract`.

    Every index must appear exactly twice overall (summed) or once in an
    operand and once in the output; no traces or batch indices.
    """
    m = _SPEC.match(spec)
    if not m:
        raise ValueError(f"bad contraction spec {spec!r}")
    ia, ib, out = m.groups()
    if len(ia) != a.ndim or len(ib) != b.ndim:
        raise ValueError(f"spec {spec!r} does not match ranks {a.ndim}, {b.ndim}")
    shared = [c for c in ia if c in ib]
    if any(c in out for c in shared):
        raise ValueError("batch indices are not supported")
    res = contract(a, b, [ia.index(c) for c in shared], [ib.index(c) for c in shared])
    cur = [c for c in ia if c not in shared] + [c for c in ib if c not in shared]
    if sorted(cur) != sorted(out):
        raise ValueError(f"output indices {out!r} inconsistent with {spec!r}")
    perm = [cur.index(c) for c in out]
    return res if perm == list(range(len(perm))) else res.permute(*perm)


def _lapack_svd(a: torch.Tensor):
    try:
        return torch.linalg.svd(a, full_matrices=False)
    except RuntimeError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        try:
            u, s, vh = scipy.linalg.svd(a.detach().numpy(), full_matrices=False, lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise KernelError(f"SVD did not converge: {exc}") from None
        return torch.from_numpy(u), torch.from_numpy(s), torch.from_numpy(vh)


def _safe_inverse(x: torch.Tensor, eps: float = SVD_GAP_EPS) -> torch.Tensor:
    return x / (x * x + eps * eps)


class _SVD(torch.autograd.Function):
    """Thin SVD ``A = U diag(s) Vh`` with a broadened adjoint.

    The gauge terms use ``F_ij = 1/(s_j^2 - s_i^2)`` regularised as
    ``x/(x^2 + eps^2)`` with ``eps`` relative to ``s_max^2``; components belonging to zero singular values are
    dropped, which makes the backward pass valid for truncated outputs.
    """

    @staticmethod
    def forward(ctx, a):
        u, s, vh = _lapack_svd(a)
        ctx.save_for_backward(u, s, vh)
        return u, s, vh

    @staticmethod
    def backward(ctx, gu, gs, gvh):
        u, s, vh = ctx.saved_tensors
        v = vh.mT
        m, n = u.shape[0], v.shape[0]
        gu = torch.zeros_like(u) if gu is None else gu
        gs = torch.zeros_like(s) if gs is None else gs
        gv = torch.zeros_like(v) if gvh is None else gvh.mT

        s2 = s * s
        # relative: an absolute eps erases genuine gauge terms when the input is small
        f = _safe_inverse(s2[None, :] - s2[:, None], SVD_GAP_EPS * float(s2.max()) if s.numel() else 1.0)
        f.fill_diagonal_(0.0)
        nonzero = s > 0
        s_inv = torch.where(nonzero, 1.0 / torch.where(nonzero, s, torch.ones_like(s)), torch.zeros_like(s))

        utgu = u.mT @ gu
        vtgv = v.mT @ gv
        j = f * (utgu - utgu.mT)
        k = f * (vtgv - vtgv.mT)
        core = j * s[None, :] + torch.diag(gs) + s[:, None] * k
        ga = u @ core @ vh
        if m > u.shape[1]:
            ga = ga + (gu - u @ utgu) * s_inv[None, :] @ vh
        if n > v.shape[1]:
            ga = ga + (u * s_inv[None, :]) @ (gv - v @ vtgv).mT
        return ga


def svd(a: torch.Tensor):
    """Differentiable thin SVD of a matrix; see :class:`_SVD`."""
    return _SVD.apply(a)


@dataclass
class TruncationResult:
    left: torch.Tensor
    weights: torch.Tensor
    right: torch.Tensor
    discarded_weight: float


def svd_truncate(
    t: torch.Tensor,
    split: int | Sequence[int],
    chi: int,
    cutoff: float = SVD_CUTOFF,
) -> TruncationResult:
    """Best rank-``chi`` factorisation across an axis bipartition.

    ``split`` is either the number of leading axes forming the row space or
    an explicit list of row axes (the remaining axes, in order, form the
    columns). Singular values ``<= cutoff * s_max`` are dropped. ``left`` has
    shape ``row_shape + (k,)`` and ``right`` has ``(k,) + col_shape``.
    ``discarded_weight`` is the dropped fraction of ``sum(s**2)``.
    """
    if chi < 1:
        raise ValueError("chi must be >= 1")
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    if isinstance(split, int):
        rows = list(range(split))
    else:
        rows = [ax % t.ndim for ax in split]
    cols = [ax for ax in range(t.ndim) if ax not in rows]
    if rows != list(range(len(rows))):
        t = t.permute(*rows, *cols)
    row_shape = list(t.shape[: len(rows)])
    col_shape = list(t.shape[len(rows):])
    mat = t.reshape(int(np.prod(row_shape, dtype=np.int64)), -1)
    u, s, vh = svd(mat)
    s_d = s.detach()
    total = float((s_d * s_d).sum())
    if total == 0.0:
        raise KernelError("svd_truncate of an all-zero tensor")
    significant = int((s_d > cutoff * s_d[0]).sum())
    keep = max(1, min(chi, significant))
    # values under the cutoff count as exact zeros, not as discarded weight
    discarded = float((s_d[keep:significant] ** 2).sum()) / total
    u, s, vh = u[:, :keep], s[:keep], vh[:keep]
    _check_finite(s, "svd_truncate")
    return TruncationResult(
        left=u.reshape(row_shape + [keep]),
        weights=s,
        right=vh.reshape([keep] + col_shape),
        discarded_weight=min(max(discarded, 0.0), 1.0),
    )
