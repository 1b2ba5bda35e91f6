"""Energy-variance landscapes around a warm start and r_max studies."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_R_GRID = tuple(np.logspace(-3, np.log10(np.pi), 24))
MAX_FAILURE_RATE = 0.05


def parse_r_grid(text: str) -> np.ndarray:
    """``"log:a:b:n"``, ``"lin:a:b:n"`` or a comma list of radii."""
    text = text.strip()
    if text.startswith(("log:", "lin:")):
        kind, a, b, n = text.split(":")
        a, b, n = float(eval_pi(a)), float(eval_pi(b)), int(n)
        return np.logspace(np.log10(a), np.log10(b), n) if kind == "log" else np.linspace(a, b, n)
    return np.array([float(eval_pi(x)) for x in text.split(",") if x.strip()])


def eval_pi(token: str) -> float:
    token = token.strip().lower()
    if token.endswith("pi"):
        head = token[:-2].rstrip("*")
        return (float(head) if head else 1.0) * np.pi
    return float(token)


def sample_direction(seed: int, k: int, n_params: int) -> np.ndarray:
    """Uniform ``[-1, 1]^n`` vector for sample ``k``; depends only on ``(seed, k)``."""
    return np.random.default_rng([seed, k]).uniform(-1.0, 1.0, n_params)


def sample_hypercube(theta_opt, r: float, seed: int, k: int) -> np.ndarray:
    """Sample ``k`` of the hypercube of half-width ``r`` around ``theta_opt``.

    The same direction is reused at every radius (common random numbers), so
    variance curves are smooth in ``r`` while each radius still holds
    ``n_samples`` i.i.d. uniform draws.
    """
    theta_opt = np.asarray(theta_opt, dtype=float)
    return theta_opt + r * sample_direction(seed, k, theta_opt.size)


def jackknife_variance_stderr(x) -> float:
    """Jackknife standard error of the unbiased sample variance."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        return float("nan")
    x = x - x.mean()
    total, sq = x.sum(), (x * x).sum()
    loo_mean = (total - x) / (n - 1)
    loo_var = (sq - x * x - (n - 1) * loo_mean**2) / (n - 2)
    return float(np.sqrt((n - 1) / n * ((loo_var - loo_var.mean()) ** 2).sum()))


@dataclass
class VarianceScan:
    theta_opt: list[float]
    r_grid: list[float]
    n_samples: int
    energies: list[list[float]]
    variances: list[float]
    stderrs: list[float]
    n_valid: list[int]
    valid: list[bool]
    evaluator: dict
    seed: int
    spec_header: dict = field(default_factory=dict)

    def rows(self):
        for r, v, s, n, ok in zip(self.r_grid, self.variances, self.stderrs, self.n_valid, self.valid):
            yield {"r": r, "var": v, "stderr": s, "n_valid": n, "valid": int(ok)}

    def write_csv(self, path) -> None:
        write_rows(path, list(self.rows()))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RmaxResult:
    r_max: float
    variance: float
    index: int
    resolution: float  # ratio to the neighbouring grid point

    def to_dict(self) -> dict:
        return asdict(self)


def write_rows(path, rows: list[dict]) -> None:
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _unbiased_variance(e: np.ndarray) -> float:
    if e.size < 2:
        return float("nan")
    if np.all(e == e[0]):
        return 0.0
    return float(np.var(e, ddof=1))


def variance_scan(theta_opt, spec, evaluator, r_grid=DEFAULT_R_GRID, n_samples: int = 1000, seed: int = 0) -> VarianceScan:
    """Unbiased ``Var(E)`` over ``n_samples`` uniform draws in each hypercube of half-width ``r``.

    Every parameter, including the warm-start prefix, is perturbed. ``r = 0``
    is accepted and yields zero variance.
    """
    r_grid = [float(r) for r in r_grid]
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if not r_grid or any(r < 0 for r in r_grid) or any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be non-negative and strictly ascending")
    theta_opt = np.asarray(theta_opt, dtype=float)
    if theta_opt.size != spec.n_params:
        raise ValueError(f"theta_opt has {theta_opt.size} entries, circuit expects {spec.n_params}")
    energies, variances, stderrs, n_valid, valid = [], [], [], [], []
    directions = np.stack([sample_direction(seed, k, theta_opt.size) for k in range(n_samples)])
    for r in r_grid:
        batch = theta_opt + r * directions
        try:
            e = np.asarray(evaluator.energies(batch), dtype=float)
        except Exception as exc:
            log.warning("batched evaluation failed at r=%g (%s); retrying per sample", r, exc)
            e = np.empty(n_samples)
            for k, th in enumerate(batch):
                try:
                    e[k] = evaluator(th)
                except Exception as exc_k:
                    log.warning("sample %d at r=%g failed: %s", k, r, exc_k)
                    e[k] = np.nan
        ok = np.isfinite(e)
        good = e[ok]
        energies.append(good.tolist())
        n_valid.append(int(ok.sum()))
        valid.append(bool(1 - ok.mean() <= MAX_FAILURE_RATE and good.size >= 2))
        variances.append(_unbiased_variance(good))
        stderrs.append(jackknife_variance_stderr(good))
    describe = evaluator.describe() if hasattr(evaluator, "describe") else {}
    header = spec.header() if hasattr(spec, "header") else {}
    return VarianceScan(theta_opt.tolist(), r_grid, n_samples, energies, variances, stderrs, n_valid, valid,
                        describe, seed, header)


def find_rmax(scan: VarianceScan) -> RmaxResult:
    """Grid argmax of the variance over valid radii; ties go to the smaller ``r``."""
    r = np.asarray(scan.r_grid, dtype=float)
    if r.size < 3:
        raise ValueError("need at least 3 grid points")
    v = np.where(np.asarray(scan.valid, bool), np.asarray(scan.variances, dtype=float), -np.inf)
    v = np.where(np.isfinite(v), v, -np.inf)
    if not np.any(np.isfinite(v)):
        raise ValueError("every radius in the scan is invalid")
    i = int(np.argmax(v))
    nb = [r[j] for j in (i - 1, i + 1) if 0 <= j < r.size and r[j] > 0]
    res = max(max(r[i], x) / min(r[i], x) for x in nb) if nb and r[i] > 0 else float("nan")
    return RmaxResult(float(r[i]), float(v[i]), i, float(res))


def unconverged_radii(scan_lo: VarianceScan, scan_hi: VarianceScan, tol: float = 0.1) -> list[bool]:
    """Flag radii where variances at chi and 2*chi disagree by more than ``tol`` relative."""
    if scan_lo.r_grid != scan_hi.r_grid:
        raise ValueError("scans use different r grids")
    out = []
    for a, b in zip(scan_lo.variances, scan_hi.variances):
        scale = max(abs(a), abs(b))
        out.append(bool(scale > 0 and abs(a - b) > tol * scale))
    return out


def _linear_fit(x, y) -> dict:
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2, "residual": ss_res}


@dataclass
class Instance:
    """One point along a study axis."""

    label: str
    x: float
    theta_opt: np.ndarray
    spec: object
    evaluator: object


def rmax_study(axis: str, instances, r_grid=DEFAULT_R_GRID, n_samples: int = 1000, seed: int = 0):
    """r_max per instance plus a trend fit.

    ``axis="depth"`` fits ``log r_max = slope * log D + c`` (a ``1/sqrt(D)`` law
    has slope -1/2); ``axis="size"`` fits ``r_max`` linearly in ``N``.
    """
    axis = axis.lower()
    if axis not in ("depth", "size"):
        raise ValueError(f"axis must be 'depth' or 'size', got {axis!r}")
    instances = list(instances)
    if len(instances) < 3:
        raise ValueError("an r_max study needs at least 3 instances")
    rows, scans = [], []
    for inst in instances:
        scan = variance_scan(inst.theta_opt, inst.spec, inst.evaluator, r_grid, n_samples, seed)
        rm = find_rmax(scan)
        scans.append(scan)
        rows.append({"label": inst.label, "x": float(inst.x), "r_max": rm.r_max, "var_max": rm.variance})
    xs = np.array([r["x"] for r in rows])
    ys = np.array([r["r_max"] for r in rows])
    if axis == "depth":
        fit = _linear_fit(np.log(xs), np.log(ys))
        fit["model"] = "log r_max = slope * log D + intercept"
    else:
        fit = _linear_fit(xs, ys)
        fit["model"] = "r_max = slope * N + intercept"
    return rows, fit, scans


def save_scan(scan: VarianceScan, rmax: RmaxResult | None, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scan.write_csv(out / "scan.csv")
    (out / "scan.json").write_text(json.dumps(scan.to_dict(), indent=1))
    if rmax is not None:
        (out / "rmax.json").write_text(json.dumps(rmax.to_dict(), indent=1))
