"""Accuracy-versus-cost benchmark of tensor-network energy evaluation."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from .landscape import write_rows

log = logging.getLogger(__name__)

BETA_QC = 0.5
MIN_TIME_SPREAD = 2.0


class ReferenceUnconverged(RuntimeError):
    """The largest-chi reference failed its self-consistency check."""


@dataclass
class ScalingPoint:
    chi: int
    chi_e: int | None
    t: float
    eps: list[float]
    eps_mean: float
    eps_std: float = 0.0

    def row(self) -> dict:
        return {"chi": self.chi, "chi_E": self.chi_e if self.chi_e is not None else "",
                "t": self.t, "eps_mean": self.eps_mean, "eps_std": self.eps_std}


@dataclass
class ScalingFit:
    alpha: float
    beta: float
    residual: float
    n_points: int
    verdict: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScalingRun:
    points: list[ScalingPoint]
    reference: str
    reference_ok: bool = True
    notes: list[str] = field(default_factory=list)

    def write_csv(self, path) -> None:
        write_rows(path, [p.row() for p in self.points])


def mean_error(eps) -> tuple[float, float]:
    e = np.sort(np.asarray(eps, dtype=float))  # sorted so the mean is order independent
    if e.size == 0:
        return float("nan"), float("nan")
    return float(e.sum() / e.size), float(e.std())


def chi_e_for(rule: str, chi: int) -> int | None:
    """``"square"`` gives ``chi**2``; ``"fixed:K"`` gives ``K``; ``"none"`` for SU."""
    if rule == "square":
        return chi * chi
    if rule.startswith("fixed:"):
        return int(rule.split(":", 1)[1])
    if rule == "none":
        return None
    raise ValueError(f"unknown chi_E rule {rule!r}")


def sample_points(theta_opt, r_max: float, n_points: int, seed: int) -> np.ndarray:
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    theta_opt = np.asarray(theta_opt, dtype=float)
    return np.stack([theta_opt + r_max * np.random.default_rng([seed, k]).uniform(-1, 1, theta_opt.shape)
                     for k in range(n_points)])


def _timed(evaluator, theta) -> tuple[float, float]:
    t0 = time.perf_counter()
    e = evaluator(theta)
    return e, time.perf_counter() - t0


def scaling_benchmark(
    theta_opt,
    evaluator,
    r_max: float,
    n_points: int = 10,
    chi_list=(2, 3, 4, 5, 6),
    reference: str = "statevector",
    seed: int = 0,
    chie_rule: str = "square",
) -> ScalingRun:
    """Time and error of the energy at each ``chi`` over ``n_points`` samples.

    ``evaluator`` fixes lattice, depth, g and the contraction method; its
    ``chi``/``chi_e`` are overridden per point. Timings cover evolution plus
    contraction only and are taken with one intra-op thread.

    With ``reference="converged-tn"`` the last entry of ``chi_list`` is the
    reference, the one before it is its check, and the remaining entries are
    the resolved points. The reference is accepted when the mean check error
    is below 10% of the smallest resolved mean error.
    """
    chi_list = [int(c) for c in chi_list]
    if any(b <= a for a, b in zip(chi_list, chi_list[1:])):
        raise ValueError("chi_list must be strictly ascending")
    if reference not in ("statevector", "converged-tn"):
        raise ValueError(f"unknown reference {reference!r}")
    if reference == "converged-tn" and len(chi_list) < 3:
        raise ValueError("converged-tn reference needs at least 3 bond dimensions")
    thetas = sample_points(theta_opt, r_max, n_points, seed)
    prev_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        if reference == "statevector":
            e_ref = evaluator.with_(method="statevector").energies(thetas)
        energies: dict[int, np.ndarray] = {}
        times: dict[int, float] = {}
        for chi in chi_list:
            ev = evaluator.with_(chi=chi, chi_e=chi_e_for(chie_rule, chi) if evaluator.method == "boundary" else None)
            es, ts = [], []
            for k, th in enumerate(thetas):
                try:
                    e, dt = _timed(ev, th)
                except Exception as exc:
                    log.warning("chi=%d sample %d failed: %s", chi, k, exc)
                    e, dt = float("nan"), float("nan")
                es.append(e)
                ts.append(dt)
            energies[chi] = np.array(es)
            times[chi] = float(np.nanmean(ts))
    finally:
        torch.set_num_threads(prev_threads)

    run = ScalingRun([], reference)
    if reference == "converged-tn":
        e_ref = energies[chi_list[-1]]
        check = float(np.nanmean(np.abs(energies[chi_list[-2]] - e_ref)))
        resolved = [float(np.nanmean(np.abs(energies[c] - e_ref))) for c in chi_list[:-2]]
        smallest = min(resolved)
        run.reference_ok = bool(check < 0.1 * smallest)
        run.notes.append(f"reference chi={chi_list[-1]} check={check:.3e} smallest resolved={smallest:.3e}")
        if not run.reference_ok:
            log.warning("converged-tn reference failed its self-consistency check: %s", run.notes[-1])
    for chi in chi_list:
        eps = np.abs(energies[chi] - e_ref)
        eps = eps[np.isfinite(eps)]
        m, s = mean_error(eps)
        ce = chi_e_for(chie_rule, chi) if evaluator.method == "boundary" else None
        run.points.append(ScalingPoint(chi, ce, times[chi], eps.tolist(), m, s))
    return run


def fit_power_law(points, selection="square") -> ScalingFit:
    """Least-squares fit of ``log eps = log alpha - beta log t``.

    ``selection`` is ``"square"`` (points with ``chi_E == chi**2`` when a chi_E
    is present), ``"all"``, or a predicate on points.
    """
    pts = list(points)
    if selection == "square":
        pts = [p for p in pts if p.chi_e is None or p.chi_e == p.chi * p.chi]
    elif callable(selection):
        pts = [p for p in pts if selection(p)]
    elif selection != "all":
        raise ValueError(f"unknown selection {selection!r}")
    pts = [p for p in pts if p.eps_mean > 0 and np.isfinite(p.eps_mean)]
    if len(pts) < 3:
        raise ValueError(f"power-law fit needs >= 3 points with eps > 0, got {len(pts)}")
    t = np.array([p.t for p in pts], dtype=float)
    eps = np.array([p.eps_mean for p in pts], dtype=float)
    if np.any(t <= 0):
        raise ValueError("times must be positive")
    if t.max() / t.min() < MIN_TIME_SPREAD:
        raise ValueError(f"time spread {t.max() / t.min():.3g} is below {MIN_TIME_SPREAD}; refusing to fit")
    A = np.column_stack([np.ones_like(t), -np.log(t)])
    coef, *_ = np.linalg.lstsq(A, np.log(eps), rcond=None)
    resid = np.log(eps) - A @ coef
    log_alpha, beta = coef
    verdict = "QC_favored" if beta < BETA_QC else "TN_favored"
    return ScalingFit(float(np.exp(log_alpha)), float(beta), float(np.sqrt(np.mean(resid**2))), len(pts), verdict)


def quantum_baseline(points, t_grid=None) -> tuple[np.ndarray, np.ndarray]:
    """``eps = c / sqrt(t)`` through the first point; for plotting only."""
    pts = list(points)
    if not pts:
        raise ValueError("need at least one point")
    t0, e0 = float(pts[0].t), float(pts[0].eps_mean)
    c = e0 * np.sqrt(t0)
    if t_grid is None:
        ts = [p.t for p in pts]
        t_grid = np.geomspace(min(ts), max(ts), 50) if max(ts) > min(ts) else np.array([t0])
    t_grid = np.asarray(t_grid, dtype=float)
    return t_grid, c / np.sqrt(t_grid)
