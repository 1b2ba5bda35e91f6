"""Qubit interaction graphs and their brickwall edge partitions.

Two families are supported: open-boundary square grids and heavy-hex
coupling graphs. Site ``r * cols + c`` sits at row ``r``, column ``c`` of a
square grid. Heavy-hex presets are prefixes (in site-index order) of a
127-qubit device-style layout, see :func:`heavyhex_layout`.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

Edge = tuple[int, int]

HEAVYHEX_PRESETS = (28, 53, 75, 127)


@dataclass(frozen=True)
class Lattice:
    """Immutable interaction graph.

    ``edges`` are sorted ``(i, j)`` pairs with ``i < j``; ``groups`` is an
    ordered edge colouring where each group is a matching.
    """

    kind: str
    n_sites: int
    edges: tuple[Edge, ...]
    groups: tuple[tuple[Edge, ...], ...]
    rows: int | None = None
    cols: int | None = None
    preset: int | None = None
    _neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nbrs: list[list[int]] = [[] for _ in range(self.n_sites)]
        for i, j in self.edges:
            if 0 <= i < self.n_sites and 0 <= j < self.n_sites:
                nbrs[i].append(j)
                nbrs[j].append(i)
        object.__setattr__(self, "_neighbors", tuple(tuple(sorted(n)) for n in nbrs))

    @property
    def name(self) -> str:
        if self.kind == "square":
            return f"square:{self.rows}x{self.cols}"
        if self.kind == "heavyhex":
            return f"heavyhex:{self.preset}"
        return f"{self.kind}:{self.n_sites}"

    @property
    def coordination(self) -> list[int]:
        return [len(n) for n in self._neighbors]

    @property
    def max_degree(self) -> int:
        return max(self.coordination, default=0)

    def neighbors(self, site: int) -> tuple[int, ...]:
        return self._neighbors[site]

    def incident_edges(self, site: int) -> list[Edge]:
        """Edges touching ``site`` in neighbour order (the site tensor's virtual-axis order)."""
        return [(min(site, n), max(site, n)) for n in self._neighbors[site]]

    def is_square(self) -> bool:
        return self.kind == "square"

    def coords(self, site: int) -> tuple[int, int]:
        if not self.is_square():
            raise ValueError("coordinates are only defined for square grids")
        return divmod(site, self.cols)

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "n_sites": self.n_sites,
            "edges": [list(e) for e in self.edges],
            "groups": [[list(e) for e in g] for g in self.groups],
        }
        if self.kind == "square":
            d["rows"], d["cols"] = self.rows, self.cols
        if self.kind == "heavyhex":
            d["preset"] = self.preset
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "Lattice":
        return cls(
            kind=d["kind"],
            n_sites=int(d["n_sites"]),
            edges=tuple(tuple(e) for e in d["edges"]),
            groups=tuple(tuple(tuple(e) for e in g) for g in d["groups"]),
            rows=d.get("rows"),
            cols=d.get("cols"),
            preset=d.get("preset"),
        )


def _edge(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


def build_square(rows: int, cols: int) -> Lattice:
    """Open-boundary ``rows x cols`` grid.

    Brickwall groups, in order: horizontal bonds starting on an even column,
    horizontal odd, vertical bonds starting on an even row, vertical odd.
    Empty groups are dropped.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    site = lambda r, c: r * cols + c  # noqa: E731
    buckets: list[list[Edge]] = [[], [], [], []]
    for r in range(rows):
        for c in range(cols - 1):
            buckets[c % 2].append((site(r, c), site(r, c + 1)))
    for r in range(rows - 1):
        for c in range(cols):
            buckets[2 + r % 2].append((site(r, c), site(r + 1, c)))
    groups = tuple(tuple(sorted(b)) for b in buckets if b)
    edges = tuple(sorted(e for g in groups for e in g))
    return Lattice("square", rows * cols, edges, groups, rows=rows, cols=cols)


def heavyhex_layout(n_rows: int = 7) -> tuple[int, list[Edge]]:
    """Device-style heavy-hex coupling map.

    Qubit rows of 15 columns are joined by bridge qubits, alternating between
    columns {0, 4, 8, 12} and {2, 6, 10, 14}. The first row drops column 14
    and the last row drops column 0, as on 127-qubit devices. Sites are
    numbered row, then its outgoing bridges, then the next row; with
    ``n_rows=7`` this reproduces the familiar 127-qubit map.
    """
    edges: list[Edge] = []
    row_sites: list[dict[int, int]] = []
    bridge_cols: list[tuple[int, ...]] = []
    n = 0
    pending: list[tuple[int, int]] = []  # (bridge site, column)
    for r in range(n_rows):
        if r == 0:
            cols = range(0, 14)
        elif r == n_rows - 1:
            cols = range(1, 15)
        else:
            cols = range(0, 15)
        sites = {}
        for c in cols:
            sites[c] = n
            n += 1
        for c in list(cols)[:-1]:
            edges.append((sites[c], sites[c + 1]))
        for b, c in pending:
            edges.append(_edge(b, sites[c]))
        pending = []
        row_sites.append(sites)
        if r < n_rows - 1:
            bc = (0, 4, 8, 12) if r % 2 == 0 else (2, 6, 10, 14)
            bridge_cols.append(bc)
            for c in bc:
                edges.append((sites[c], n))
                pending.append((n, c))
                n += 1
    return n, sorted(edges)


def greedy_edge_coloring(edges: Sequence[Edge]) -> tuple[tuple[Edge, ...], ...]:
    """Assign each edge (in lexicographic order) the smallest colour free at both ends."""
    used: dict[int, set[int]] = {}
    colour_of: dict[Edge, int] = {}
    for e in sorted(edges):
        taken = used.setdefault(e[0], set()) | used.setdefault(e[1], set())
        c = 0
        while c in taken:
            c += 1
        colour_of[e] = c
        used[e[0]].add(c)
        used[e[1]].add(c)
    n_colours = max(colour_of.values(), default=-1) + 1
    return tuple(
        tuple(sorted(e for e, c in colour_of.items() if c == k)) for k in range(n_colours)
    )


def build_heavyhex(preset: int) -> Lattice:
    """Heavy-hex lattice with ``preset`` qubits (one of 28, 53, 75, 127)."""
    if preset not in HEAVYHEX_PRESETS:
        raise ValueError(f"heavyhex preset must be one of {HEAVYHEX_PRESETS}, got {preset}")
    _, full = heavyhex_layout(7)
    edges = tuple(e for e in full if e[1] < preset)
    return Lattice("heavyhex", preset, edges, greedy_edge_coloring(edges), preset=preset)


def parse_lattice(text: str) -> Lattice:
    """Parse ``square:RxC``, ``chain:N`` or ``heavyhex:N``."""
    try:
        kind, _, arg = text.strip().partition(":")
        if kind == "square":
            r, c = arg.lower().split("x")
            return build_square(int(r), int(c))
        if kind == "chain":
            return build_square(1, int(arg))
        if kind == "heavyhex":
            return build_heavyhex(int(arg))
    except ValueError as exc:
        raise ValueError(f"bad lattice spec {text!r}: {exc}") from None
    raise ValueError(f"bad lattice spec {text!r}; expected square:RxC, chain:N or heavyhex:N")


def is_connected(lattice: Lattice) -> bool:
    if lattice.n_sites == 0:
        return True
    seen = {0}
    stack = [0]
    while stack:
        s = stack.pop()
        for n in lattice.neighbors(s):
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == lattice.n_sites


def validate(lattice: Lattice) -> list[str]:
    """Return a list of invariant violations (empty when the lattice is valid)."""
    problems = []
    counts = Counter(_edge(*e) for e in lattice.edges)
    for e, k in counts.items():
        if k > 1:
            problems.append(f"edge multiplicity: {e} appears {k} times")
        if e[0] == e[1]:
            problems.append(f"self loop: {e}")
        if not (0 <= e[0] < lattice.n_sites and 0 <= e[1] < lattice.n_sites):
            problems.append(f"edge out of range: {e}")
    grouped = Counter(_edge(*e) for g in lattice.groups for e in g)
    for e in counts:
        if grouped[e] != 1:
            problems.append(f"edge {e} appears in {grouped[e]} brickwall groups")
    for e in grouped:
        if e not in counts:
            problems.append(f"grouped edge {e} not in edge set")
    for k, g in enumerate(lattice.groups):
        sites = [s for e in g for s in e]
        if len(sites) != len(set(sites)):
            problems.append(f"group not a matching: group {k}")
    if lattice.kind == "square":
        r, c = lattice.rows, lattice.cols
        if lattice.n_sites != r * c:
            problems.append(f"site count {lattice.n_sites} != {r}*{c}")
        if len(lattice.edges) != r * (c - 1) + c * (r - 1):
            problems.append(f"edge count {len(lattice.edges)} != R(C-1)+C(R-1)")
        if lattice.max_degree > 4:
            problems.append(f"max degree {lattice.max_degree} > 4")
    elif lattice.kind == "heavyhex":
        if lattice.max_degree > 3:
            problems.append(f"max degree {lattice.max_degree} > 3")
        if not is_connected(lattice):
            problems.append("heavyhex lattice is not connected")
    return problems
