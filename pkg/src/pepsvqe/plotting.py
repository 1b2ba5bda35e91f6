"""Minimal self-contained SVG line plots."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
W, H = 640, 440
M_LEFT, M_RIGHT, M_TOP, M_BOTTOM = 80, 150, 30, 60

# column defaults per known CSV layout: (x, y, series)
SCHEMAS = {
    "scaling": ("t", "eps_mean", None),
    "scan": ("r", "var", None),
    "trace": ("iteration", "energy", None),
    "sweep": ("g", "rel_error", "depth"),
    "rmax": ("x", "r_max", None),
}


class PlotError(ValueError):
    pass


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows


def detect_schema(columns) -> str | None:
    for name, (x, y, s) in SCHEMAS.items():
        if x in columns and y in columns and (s is None or s in columns):
            return name
    return None


def _float(v) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        return [float(k) for k in range(a, b + 1) if lo - 1e-9 <= k <= hi + 1e-9] or [lo, hi]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / 4)) if span > 0 else 1.0
    for m in (1, 2, 5, 10):
        if span / (step * m) <= 6:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return f"{v:.4g}"


def render_svg(series: dict[str, tuple[np.ndarray, np.ndarray]], log: bool, xlabel: str, ylabel: str,
               dashed: dict[str, tuple[np.ndarray, np.ndarray]] | None = None, title: str = "") -> str:
    dashed = dashed or {}
    tx = (lambda v: np.log10(v)) if log else (lambda v: v)
    pts = {}
    for name, (x, y) in list(series.items()) + list(dashed.items()):
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y)
        if log:
            ok &= (x > 0) & (y > 0)
        pts[name] = (tx(x[ok]), tx(y[ok]))
    allx = np.concatenate([p[0] for p in pts.values()]) if pts else np.array([])
    ally = np.concatenate([p[1] for p in pts.values()]) if pts else np.array([])
    if allx.size == 0:
        raise PlotError("nothing to plot")
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = W - M_LEFT - M_RIGHT, H - M_TOP - M_BOTTOM

    def sx(v):
        return M_LEFT + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return M_TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
           'font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{M_LEFT}" y="{M_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    if title:
        out.append(f'<text x="{M_LEFT + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    for v in _ticks(x0, x1, log):
        X = sx(v)
        out.append(f'<line x1="{X:.2f}" y1="{M_TOP + ph}" x2="{X:.2f}" y2="{M_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{M_TOP + ph + 18}" text-anchor="middle">{_fmt(v, log)}</text>')
    for v in _ticks(y0, y1, log):
        Y = sy(v)
        out.append(f'<line x1="{M_LEFT - 5}" y1="{Y:.2f}" x2="{M_LEFT}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{M_LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(v, log)}</text>')
    out.append(f'<text x="{M_LEFT + pw / 2}" y="{H - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{M_TOP + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {M_TOP + ph / 2})">{escape(ylabel)}</text>')
    for k, name in enumerate(list(series) + list(dashed)):
        xs, ys = pts[name]
        if xs.size == 0:
            continue
        color = COLORS[k % len(COLORS)]
        is_dashed = name in dashed
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))
        dash = ' stroke-dasharray="6,4"' if is_dashed else ""
        out.append(f'<polyline class="series" data-label="{escape(name)}" points="{coords}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"{dash}/>')
        if not is_dashed:
            for a, b in zip(xs, ys):
                out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="{color}"/>')
        ly = M_TOP + 14 + 18 * k
        lx = M_LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(csv_path, kind: str, out_svg, x: str | None = None, y: str | None = None,
              series: str | None = None, baseline: bool | None = None, title: str = "") -> Path:
    """Plot a CSV as ``line`` or ``loglog``.

    Columns default from the detected layout. Scaling CSVs get the dashed
    ``c/sqrt(t)`` sampling baseline through their first point.
    """
    if kind not in ("line", "loglog"):
        raise PlotError(f"kind must be 'line' or 'loglog', got {kind!r}")
    rows = read_csv(csv_path)
    cols = set(rows[0])
    schema = detect_schema(cols)
    if (x is None or y is None) and schema is None:
        raise PlotError(f"{csv_path}: unrecognised columns {sorted(cols)}; pass x and y")
    dx, dy, ds = SCHEMAS.get(schema, (None, None, None))
    x, y = x or dx, y or dy
    series = series if series is not None else ds
    for c in (x, y) + ((series,) if series else ()):
        if c not in cols:
            raise PlotError(f"{csv_path}: missing column {c!r}")
    groups: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        key = f"{series}={row[series]}" if series else y
        groups.setdefault(key, []).append((_float(row[x]), _float(row[y])))
    data = {}
    for key, xy in groups.items():
        xy.sort()
        a = np.array(xy)
        data[key] = (a[:, 0], a[:, 1])
    dashed = {}
    if baseline is None:
        baseline = schema == "scaling" and kind == "loglog"
    if baseline:
        first = next(iter(data.values()))
        t0, e0 = float(rows[0][x]), float(rows[0][y])
        tg = np.geomspace(max(first[0].min(), 1e-300), max(first[0].max(), 1e-300), 50)
        dashed["quantum c/sqrt(t)"] = (tg, e0 * math.sqrt(t0) / np.sqrt(tg))
    svg = render_svg(data, kind == "loglog", x, y, dashed, title)
    out = Path(out_svg)
    out.write_text(svg)
    return out
