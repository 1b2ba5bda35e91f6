"""Boundary-MPS contraction of ``<psi|P|psi>`` on open square grids.

Site tensors are brought to a uniform ``(p, up, left, right, down)`` layout
with ``sqrt(weight)`` absorbed on both sides of every bond. Rows are
absorbed into a boundary MPS from the top and from the bottom; after each
row the boundary is compressed to bond dimension ``chi_e`` by a zip-up
sweep of truncated SVDs. Sweep direction alternates from row to row so each
zip-up starts from the orthogonality centre left by the previous one.

Boundary MPS sites have legs ``(left, ket, bra, right)``. Term values are
ratios of strip contractions that share the same environments, so the
overall scale of each environment is irrelevant.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import torch

from ..tensor import SVD_CUTOFF, as_tensor, einsum2, svd_truncate
from .state import PepsState, scale_axis


def grid_tensors(state: PepsState) -> list[list[torch.Tensor]]:
    """Five-leg ``(p, u, l, r, d)`` ket tensors, dimension-1 legs on the boundary."""
    lat = state.lattice
    if not lat.is_square():
        raise ValueError(f"boundary-MPS contraction needs a square grid, got {lat.name}")
    rows, cols = lat.rows, lat.cols
    out = [[None] * cols for _ in range(rows)]
    for r in range(rows):
        for c in range(cols):
            s = r * cols + c
            t = state.tensors[s]
            for e in lat.incident_edges(s):
                t = scale_axis(t, state.axis(s, e), state.weights[e].sqrt())
            nbr = {
                "u": s - cols if r > 0 else None,
                "l": s - 1 if c > 0 else None,
                "r": s + 1 if c < cols - 1 else None,
                "d": s + cols if r < rows - 1 else None,
            }
            # incident edges are sorted by neighbour index, i.e. u, l, r, d
            k = 1
            for key in "ulrd":
                if nbr[key] is None:
                    t = t.unsqueeze(k)
                k += 1
            out[r][c] = t
    return out


def _normalised(t: torch.Tensor) -> torch.Tensor:
    scale = t.detach().abs().max()
    return t / scale if float(scale) > 0 else t


def _mirror_site(t: torch.Tensor) -> torch.Tensor:
    return t.permute(0, 1, 3, 2, 4)


def _mirror_mps(m: torch.Tensor) -> torch.Tensor:
    return m.permute(3, 1, 2, 0)


def _flip_site(t: torch.Tensor) -> torch.Tensor:
    return t.permute(0, 4, 2, 3, 1)


def _zip_up(mps, kets, bras, chi_e: int, cutoff: float):
    """Absorb one row left-to-right. ``mps[c]`` legs ``(a, u, U, b)`` face the row's up legs."""
    n = len(kets)
    carry = kets[0].new_ones((1, 1, 1, 1))  # (x, a, l, L)
    new = []
    for c in range(n):
        z = einsum2("xalL,auUb->xlLuUb", carry, mps[c])
        z = einsum2("xlLuUb,pulrd->xLUbprd", z, kets[c])
        z = einsum2("xLUbprd,pULRD->xbrdRD", z, bras[c])
        if c == n - 1:
            new.append(_normalised(z.permute(0, 3, 5, 1, 2, 4).reshape(z.shape[0], z.shape[3], z.shape[5], 1)))
            break
        res = svd_truncate(z, [0, 3, 5], chi_e, cutoff)
        new.append(res.left)
        carry = _normalised(res.weights.reshape(-1, 1, 1, 1) * res.right)
    return new


def absorb_row(mps, kets, bras, chi_e: int, reverse: bool = False, cutoff: float = SVD_CUTOFF):
    if not reverse:
        return _zip_up(mps, kets, bras, chi_e, cutoff)
    out = _zip_up(
        [_mirror_mps(m) for m in reversed(mps)],
        [_mirror_site(t) for t in reversed(kets)],
        [_mirror_site(t) for t in reversed(bras)],
        chi_e,
        cutoff,
    )
    return [_mirror_mps(m) for m in reversed(out)]


def _strip_step(carry, top, ket_rows, bra_rows, bot):
    """Advance a left carry ``(a, [l_k, L_k]*, e)`` over one column of a 1- or 2-row strip."""
    if len(ket_rows) == 1:
        (k1,), (b1,) = ket_rows, bra_rows
        z = einsum2("alLe,auUb->lLeuUb", carry, top)
        z = einsum2("lLeuUb,pulrd->LeUbprd", z, k1)
        z = einsum2("LeUbprd,pULRD->ebrdRD", z, b1)
        return einsum2("ebrdRD,edDf->brRf", z, bot)
    k1, k2 = ket_rows
    b1, b2 = bra_rows
    z = einsum2("ahHkKe,auUb->hHkKeuUb", carry, top)
    z = einsum2("hHkKeuUb,puhrd->HkKeUbprd", z, k1)
    z = einsum2("HkKeUbprd,pUHRD->kKebrdRD", z, b1)
    z = einsum2("kKebrdRD,qdksm->KebrRDqsm", z, k2)
    z = einsum2("KebrRDqsm,qDKSM->ebrRsmSM", z, b2)
    return einsum2("ebrRsmSM,emMf->brRsSf", z, bot)


class _Strip:
    """One- or two-row strip between a top and a bottom environment."""

    def __init__(self, top, ket_rows, bot):
        self.top, self.kets, self.bot = top, ket_rows, bot
        n = len(top)
        rank = 4 if len(ket_rows) == 1 else 6
        one = top[0].new_ones((1,) * rank)
        self.left = [one]
        self.left_scale = []  # left[c+1] = step(left[c]) / left_scale[c]
        for c in range(n):
            raw = self._step(self.left[-1], c, {})
            scale = raw.detach().abs().max()
            self.left.append(raw / scale)
            self.left_scale.append(scale)
        mtop = [_mirror_mps(m) for m in reversed(top)]
        mbot = [_mirror_mps(m) for m in reversed(bot)]
        mkets = [[_mirror_site(t) for t in reversed(row)] for row in ket_rows]
        right = [one]
        for c in range(n):
            col = [row[c] for row in mkets]
            right.append(_normalised(_strip_step(right[-1], mtop[c], col, col, mbot[c])))
        self.right = right[::-1]  # right[c] covers columns c..n-1

    def _step(self, carry, c, ops: Mapping[int, torch.Tensor]):
        kets = [row[c] for row in self.kets]
        opk = [torch.tensordot(ops[k], t, dims=([1], [0])) if k in ops else t for k, t in enumerate(kets)]
        return _strip_step(carry, self.top[c], opk, kets, self.bot[c])

    def value(self, placements: Mapping[tuple[int, int], torch.Tensor]) -> torch.Tensor:
        """``<P>/<1>`` for ops placed at ``(strip_row, column)`` positions."""
        cols = sorted({c for _, c in placements})
        c0, c1 = cols[0], cols[-1]
        if c1 - c0 > 1:
            raise ValueError("operators must sit on at most two adjacent columns")
        num = self.left[c0]
        for c in range(c0, c1 + 1):
            ops = {k: op for (k, cc), op in placements.items() if cc == c}
            num = self._step(num, c, ops)
        # the operator-free carry over the same columns is the cached left environment
        scale = torch.prod(torch.stack(self.left_scale[c0: c1 + 1]))
        rc = self.right[c1 + 1]
        return (num * rc).sum() / ((self.left[c1 + 1] * rc).sum() * scale)


class BoundaryContractor:
    """Shared boundary environments for evaluating many local terms on one state."""

    def __init__(self, kets: Sequence[Sequence[torch.Tensor]], chi_e: int, cutoff: float = SVD_CUTOFF):
        if chi_e < 1:
            raise ValueError("chi_E must be >= 1")
        self.kets = [list(row) for row in kets]
        self.rows, self.cols = len(self.kets), len(self.kets[0])
        self.chi_e = chi_e
        trivial = [self.kets[0][0].new_ones((1, 1, 1, 1)) for _ in range(self.cols)]
        self.top = [trivial]
        for r in range(self.rows - 1):
            row = self.kets[r]
            self.top.append(absorb_row(self.top[-1], row, row, chi_e, reverse=bool(r % 2), cutoff=cutoff))
        bottom = [trivial]
        for k, r in enumerate(range(self.rows - 1, 0, -1)):
            row = [_flip_site(t) for t in self.kets[r]]
            bottom.append(absorb_row(bottom[-1], row, row, chi_e, reverse=bool(k % 2), cutoff=cutoff))
        self.bottom = bottom[::-1]  # bottom[r] holds rows r+1 .. rows-1
        self._strips: dict[tuple[int, int], _Strip] = {}

    @classmethod
    def from_state(cls, state: PepsState, chi_e: int, cutoff: float = SVD_CUTOFF) -> "BoundaryContractor":
        return cls(grid_tensors(state), chi_e, cutoff)

    def _strip(self, r: int, height: int) -> _Strip:
        key = (r, height)
        if key not in self._strips:
            rows = self.kets[r: r + height]
            self._strips[key] = _Strip(self.top[r], rows, self.bottom[r + height - 1])
        return self._strips[key]

    def expectation(self, ops: Mapping[tuple[int, int], object]) -> torch.Tensor:
        """``ops`` maps ``(row, col)`` -> 2x2 matrix; at most two adjacent sites."""
        ops = {tuple(k): as_tensor(v) for k, v in ops.items()}
        rs = sorted({r for r, _ in ops})
        if len(ops) > 2 or rs[-1] - rs[0] > 1:
            raise ValueError("boundary expectation supports one site or a nearest-neighbour pair")
        if len(ops) == 2:
            (r1, c1), (r2, c2) = sorted(ops)
            if abs(r1 - r2) + abs(c1 - c2) != 1:
                raise ValueError(f"sites {(r1, c1)} and {(r2, c2)} are not adjacent")
        start, height = self._placement(rs[0], len(rs))
        strip = self._strip(start, height)
        return strip.value({(r - start, c): op for (r, c), op in ops.items()})

    def _placement(self, r: int, height: int) -> tuple[int, int]:
        """Strip holding rows ``r..r+height-1`` whose environments absorb the fewest rows.

        A one-row term may sit in a two-row strip (shared with vertical terms);
        this keeps every environment exact at ``chi_E = chi^2`` on three rows.
        """
        options = [(r, height)]
        if height == 1 and self.rows > 1:
            options += [(s, 2) for s in (r - 1, r) if 0 <= s and s + 2 <= self.rows]
        return min(options, key=lambda o: (max(o[0], self.rows - o[0] - o[1]), o[1]))


def expectation_boundary_mps(state: PepsState, ops: Mapping[int, object], chi_e: int) -> torch.Tensor:
    """Single-term convenience wrapper; ``ops`` maps site index -> 2x2 matrix."""
    bc = BoundaryContractor.from_state(state, chi_e)
    cols = state.lattice.cols
    return bc.expectation({divmod(s, cols): op for s, op in ops.items()})
