"""Acceptance suite: one PASS/FAIL line per criterion (printed in the terminal summary).

Each test records its measured quantities before asserting, so a failing
criterion still reports what was achieved.
"""

import csv
import json
import math
import multiprocessing as mp
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import torch

from pepsvqe.circuit import warm_start_extend
from pepsvqe.cli import main
from pepsvqe.landscape import find_rmax, parse_r_grid, rmax_study, Instance, variance_scan
from pepsvqe.lattice import parse_lattice
from pepsvqe.optimize import Evaluator, finite_difference_gradient, gradient, initial_parameters, minimize
from pepsvqe.peps import apply_circuit, imaginary_time_evolve, init_product_state
from pepsvqe.scaling import ScalingPoint, fit_power_law, scaling_benchmark
from pepsvqe.statevector import exact_ground_energy, spectral_norm

RESULTS: dict[int, str] = {}
ROOT = Path(__file__).resolve().parents[1]
G_SQUARE = 2.6


def record(n: int, ok: bool, detail: str, elapsed: float | None = None) -> None:
    t = f" [{elapsed:.0f} s]" if elapsed is not None else ""
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}{t}"


_WARM: dict[tuple[str, int], np.ndarray] = {}


def warm_start(name: str, depth: int = 2) -> tuple[np.ndarray, Evaluator]:
    """Statevector-optimised shallow circuit at the critical field (cached per module)."""
    ev = Evaluator(parse_lattice(name), depth, G_SQUARE, method="statevector")
    key = (name, depth)
    if key not in _WARM:
        theta0 = initial_parameters("small-random", ev.n_params, 0)
        _WARM[key], _ = minimize(theta0, ev, max_iters=200)
    return _WARM[key], ev


def extended(name: str, depth_total: int):
    theta, ev2 = warm_start(name)
    ev = ev2.with_(depth=depth_total)
    return warm_start_extend(theta, ev2.spec, ev.spec), ev


# ---------------------------------------------------------------- 1


def _oracle_case(name: str, depth: int, n_theta: int, queue) -> None:
    torch.set_num_threads(1)
    lat = parse_lattice(name)
    chi = 2 ** math.ceil(lat.n_sites / 2)
    ev = Evaluator(lat, depth, 1.0, method="auto", chi=chi)
    sv = ev.with_(method="statevector", chi_e=None)
    worst = 0.0
    for k in range(n_theta):
        theta = np.random.default_rng([101, lat.n_sites, depth, k]).uniform(-np.pi, np.pi, ev.n_params)
        e_ref = sv(theta)
        worst = max(worst, abs(ev(theta) - e_ref) / abs(e_ref))
    queue.put(worst)


def oracle_cases():
    chains = [f"chain:{n}" for n in range(2, 13)]
    grids = [f"square:{r}x{c}" for r in (2, 3) for c in range(r, 7) if r * c <= 12]
    # ascending cost: chains are cheap at any depth, grid cost grows with 4**D
    return [(name, d) for d in (1, 2, 3) for name in chains] + [(name, d) for d in (1, 2, 3) for name in grids]


def test_c1_oracle_equivalence():
    budget = 120.0
    t0 = time.perf_counter()
    ctx = mp.get_context("fork")
    worst, failed, not_run = 0.0, [], []
    for name, depth in oracle_cases():
        remaining = budget - (time.perf_counter() - t0)
        if remaining <= 0:
            not_run.append(f"{name}/D{depth}")
            continue
        queue = ctx.Queue()
        proc = ctx.Process(target=_oracle_case, args=(name, depth, 10, queue))
        proc.start()
        proc.join(remaining)
        if proc.is_alive():
            proc.terminate()
            proc.join()
            not_run.append(f"{name}/D{depth}")
            continue
        if queue.empty():
            failed.append(f"{name}/D{depth}:crashed")
            continue
        err = queue.get()
        worst = max(worst, err)
        if not err < 1e-7:
            failed.append(f"{name}/D{depth}:{err:.1e}")
    elapsed = time.perf_counter() - t0
    n_cases = len(oracle_cases())
    ok = not failed and not not_run and elapsed < budget
    detail = (f"{n_cases - len(failed) - len(not_run)}/{n_cases} (lattice, D) cases within 1e-7; "
              f"max rel err of completed cases {worst:.1e}; failed: {', '.join(failed) or 'none'}; "
              f"not finished in the 2 min budget: {len(not_run)} ({', '.join(not_run[:6])}"
              f"{', ...' if len(not_run) > 6 else ''})")
    record(1, ok, detail, elapsed)
    assert ok, detail


# ---------------------------------------------------------------- 2


def _rel(a, b):
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-12))


def test_c2_gradient_correctness():
    t0 = time.perf_counter()
    exact = [("chain:4", 2, "su", 4), ("chain:5", 1, "su", 8), ("square:2x2", 1, "boundary", 16),
             ("square:2x2", 2, "boundary", 16), ("chain:6", 1, "su", 8)]
    truncated = [("square:2x2", 2, "boundary", 2), ("chain:6", 2, "su", 2), ("square:2x3", 1, "boundary", 2),
                 ("chain:5", 3, "su", 2), ("square:2x2", 3, "boundary", 3)]
    errs_exact, errs_trunc = [], []
    for group, out in ((exact, errs_exact), (truncated, errs_trunc)):
        for k, (name, depth, method, chi) in enumerate(group * 2):
            lat = parse_lattice(name)
            ev = Evaluator(lat, depth, 1.2, method=method, chi=chi)
            width = np.pi if out is errs_exact else 0.5
            theta = np.random.default_rng([202, k, chi]).uniform(-width, width, ev.n_params)
            if out is errs_trunc:
                _, elog = apply_circuit(init_product_state(lat), ev.spec, theta, chi)
                assert max(elog.discarded) > 1e-10, f"{name} D={depth} chi={chi} does not truncate"
            out.append(_rel(gradient(theta, ev), finite_difference_gradient(theta, ev)))
    elapsed = time.perf_counter() - t0
    ok = max(errs_exact) < 1e-5 and max(errs_trunc) < 1e-3 and elapsed < 120
    detail = (f"max rel grad error untruncated {max(errs_exact):.1e} (<1e-5, {len(errs_exact)} instances), "
              f"truncated {max(errs_trunc):.1e} (<1e-3, {len(errs_trunc)} instances)")
    record(2, ok, detail, elapsed)
    assert ok, detail


# ---------------------------------------------------------------- 3


def test_c3_ground_state_optimisation():
    t0 = time.perf_counter()
    lat = parse_lattice("square:2x2")
    ev = Evaluator(lat, 1, 1.0, method="boundary", chi=4)
    _, tr = minimize(initial_parameters("small-random", ev.n_params, 0), ev, max_iters=200, gtol=1e-9)
    e0 = exact_ground_energy(lat, 1.0)
    d_small = abs(min(tr.energies) - e0) / abs(e0)

    lat = parse_lattice("square:3x3")
    ev2 = Evaluator(lat, 2, G_SQUARE, method="boundary", chi=4)
    th2, tr2 = minimize(initial_parameters("small-random", ev2.n_params, 0), ev2, max_iters=200)
    e0 = exact_ground_energy(lat, G_SQUARE)
    e2 = min(tr2.energies)
    d2 = abs(e2 - e0) / abs(e0)
    ev3 = ev2.with_(depth=3)
    th3, tr3 = minimize(warm_start_extend(th2, ev2.spec, ev3.spec), ev3, max_iters=200)
    e3 = min(tr3.energies)
    elapsed = time.perf_counter() - t0
    ok = d_small < 1e-6 and d2 < 5e-2 and e3 < e2 and elapsed < 600
    detail = (f"2x2 D=1 dE={d_small:.1e} (<1e-6); 3x3 D=2 dE={d2:.2e} (<5e-2); "
              f"warm D=3 E={e3:.8f} vs D=2 E={e2:.8f} (dE={abs(e3 - e0) / abs(e0):.2e})")
    record(3, ok, detail, elapsed)
    assert ok, detail


# ---------------------------------------------------------------- 4


def test_c4_ite_reference():
    t0 = time.perf_counter()
    lat = parse_lattice("square:3x3")
    res = imaginary_time_evolve(lat, G_SQUARE, 4)
    e0 = exact_ground_energy(lat, G_SQUARE)
    rel = abs(res.energy - e0) / abs(e0)
    zero_ok = []
    for name in ("chain:7", "square:3x3", "square:4x5", "heavyhex:28", "heavyhex:127"):
        lz = parse_lattice(name)
        zero_ok.append(imaginary_time_evolve(lz, 0.0, 4, max_sweeps=5).energy == -len(lz.edges))
    elapsed = time.perf_counter() - t0
    ok = rel < 1e-3 and all(zero_ok) and elapsed < 300
    detail = f"3x3 g=2.6 chi=4 rel err {rel:.1e} (<1e-3, converged={res.converged}); g=0 exact on {sum(zero_ok)}/5 lattices"
    record(4, ok, detail, elapsed)
    assert ok, detail


# ---------------------------------------------------------------- 5


def test_c5_barren_plateau_signature():
    t0 = time.perf_counter()
    ratios = []
    for n in (4, 6, 8, 10):
        lat = parse_lattice(f"chain:{n}")
        ev = Evaluator(lat, 2 * n, 1.0, method="statevector")
        theta = np.random.default_rng([505, n]).uniform(-np.pi, np.pi, ev.n_params)
        scan = variance_scan(theta, ev.spec, ev, [np.pi], n_samples=200, seed=5)
        ratios.append(scan.variances[0] / spectral_norm(lat, 1.0) ** 2)
    decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))

    theta, ev = extended("square:3x3", 6)
    grid = parse_r_grid("log:1e-3:pi:24")
    scan = variance_scan(theta, ev.spec, ev, grid, n_samples=200, seed=0)
    rm = find_rmax(scan)
    v = np.asarray(scan.variances)
    plateau = float(np.mean(v[grid >= np.pi / 2]))
    interior = 0 < rm.index < len(grid) - 1
    ratio = rm.variance / plateau
    elapsed = time.perf_counter() - t0
    ok = decreasing and interior and rm.r_max > 0 and ratio >= 10 and elapsed < 900
    detail = (f"chains Var/|H|^2 = {', '.join(f'{x:.2e}' for x in ratios)} (strictly decreasing: {decreasing}); "
              f"3x3 D=6 r_max={rm.r_max:.3g} interior={interior}, Var(r_max)/plateau={ratio:.1f} (>=10)")
    record(5, ok, detail, elapsed)
    assert ok, detail


# ---------------------------------------------------------------- 6


def _fmt_rows(rows) -> str:
    return ", ".join(f"{r['label']}={r['r_max']:.3f}" for r in rows)


def test_c6_rmax_trends():
    t0 = time.perf_counter()
    size_inst = []
    for name in ("square:3x3", "square:4x3", "square:4x4"):
        theta, ev = extended(name, 4)
        size_inst.append(Instance(name, ev.lattice.n_sites, theta, ev.spec, ev))
    size_rows, size_fit, _ = rmax_study("size", size_inst, parse_r_grid("lin:0.2:0.35:31"), n_samples=200, seed=0)
    depth_inst = []
    for depth in (4, 8, 16):
        theta, ev = extended("square:3x3", depth)
        depth_inst.append(Instance(f"D{depth}", depth, theta, ev.spec, ev))
    depth_rows, depth_fit, _ = rmax_study("depth", depth_inst, parse_r_grid("log:1e-3:pi:24"), n_samples=200, seed=0)
    elapsed = time.perf_counter() - t0
    slope = depth_fit["slope"]
    ok = size_fit["slope"] < 0 and -0.8 <= slope <= -0.2 and elapsed < 1800
    detail = (f"size r_max {_fmt_rows(size_rows)} "
              f"slope {size_fit['slope']:.2e}/site (<0); depth r_max "
              f"{_fmt_rows(depth_rows)} log-log slope {slope:.3f} "
              f"(in [-0.8,-0.2])")
    record(6, ok, detail, elapsed)
    assert ok, detail


# ---------------------------------------------------------------- 7


def test_c7_power_law_machinery():
    t0 = time.perf_counter()
    errs = []
    for alpha, beta in ((2.0, 0.5), (0.37, 0.16), (11.0, 1.4)):
        ts = np.geomspace(0.05, 300, 7)
        pts = [ScalingPoint(c, c * c, t, [alpha / t**beta], alpha / t**beta, 0.0) for c, t in enumerate(ts, 2)]
        fit = fit_power_law(pts)
        errs += [abs(fit.alpha - alpha) / alpha, abs(fit.beta - beta)]
        for k in (0.1, 7.0):
            scaled = fit_power_law([ScalingPoint(p.chi, p.chi_e, p.t * k, p.eps, p.eps_mean, 0.0) for p in pts])
            errs += [abs(scaled.beta - fit.beta), abs(scaled.alpha - fit.alpha * k**fit.beta) / fit.alpha]
    worst = max(errs)
    ok = worst < 1e-10
    record(7, ok, f"max deviation on exact synthetic data and under t -> k t: {worst:.1e} (<1e-10)",
           time.perf_counter() - t0)
    assert ok


# ---------------------------------------------------------------- 8


def test_c8_scaling_verdict():
    t0 = time.perf_counter()
    theta, ev_sv = extended("square:4x4", 10)
    scan = variance_scan(theta, ev_sv.spec, ev_sv, parse_r_grid("lin:0.1:0.3:11"), n_samples=100, seed=0)
    r_max = find_rmax(scan).r_max
    ev = ev_sv.with_(method="boundary", chi=2, chi_e=4)
    run = scaling_benchmark(theta, ev, r_max, n_points=10, chi_list=(2, 3, 4, 5, 6), reference="statevector", seed=0)
    eps = [p.eps_mean for p in run.points]
    fit = fit_power_law(run.points)
    elapsed = time.perf_counter() - t0
    decreasing = all(b < a for a, b in zip(eps, eps[1:]))
    ok = decreasing and fit.beta < 0.5 and elapsed < 1800
    detail = (f"r_max={r_max:.3g}; mean eps by chi=2..6: {', '.join(f'{e:.3g}' for e in eps)} "
              f"(strictly decreasing: {decreasing}); t: {', '.join(f'{p.t:.3g}' for p in run.points)} s; "
              f"beta={fit.beta:.3f} (<0.5), alpha={fit.alpha:.3g}, verdict {fit.verdict}")
    record(8, ok, detail, elapsed)
    assert ok, detail


# ---------------------------------------------------------------- 9


def _csvs(d: Path) -> dict:
    out = {}
    for f in sorted(d.rglob("*.csv")):
        with open(f, newline="") as fh:
            rows = [{k: v for k, v in r.items() if k not in ("wall_clock", "t")} for r in csv.DictReader(fh)]
        out[str(f.relative_to(d))] = rows
    return out


def _resolved(stdout: str):
    """Report lines and resolved config, minus the output directory that each run overrides."""
    head, cfg = stdout[: stdout.index("{")], json.loads(stdout[stdout.index("{"):])
    cfg.pop("out", None)
    return head, cfg


def test_c9_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    warm = tmp_path / "warm"
    runs = {
        "optimize": ["--lattice", "square:2x2", "--g", "0.5", "2.6", "--depth", "1", "2", "--chi", "4",
                     "--max-iters", "15"],
        "diagnose": ["--warm", str(warm / "theta_opt.json"), "--depth-total", "4", "--r-grid", "log:1e-2:pi:8",
                     "--samples", "50"],
        "scaling": ["--warm", str(warm / "theta_opt.json"), "--depth-total", "3", "--rmax", "0.3", "--points", "3",
                    "--chi-list", "2..4"],
        "ite-reference": ["--lattice", "square:2x3", "--g", "1.0", "3.0", "--chi", "3"],
        "validate": ["--lattice", "heavyhex:53"],
    }
    assert main(["optimize", "--lattice", "square:2x2", "--g", "2.6", "--depth", "1", "--method", "statevector",
                 "--max-iters", "20", "--threads", "1", "--out", str(warm)]) == 0
    same, checked = [], 0
    for command, extra in runs.items():
        a, b = tmp_path / f"{command}_a", tmp_path / f"{command}_b"
        capsys.readouterr()
        code_a = main([command, *extra, "--threads", "1", "--out", str(a)])
        out_a = capsys.readouterr().out
        cfg = a / "config.json" if command != "validate" else tmp_path / "validate.json"
        if command == "validate":
            cfg.write_text(out_a[out_a.index("{"):])
        code_b = main([command, "--config", str(cfg), "--out", str(b)] + (["--warm", str(warm / "theta_opt.json")]
                                                                          if command in ("diagnose", "scaling") else []))
        out_b = capsys.readouterr().out
        if command == "validate":
            same.append(code_a == code_b == 0 and _resolved(out_a) == _resolved(out_b))
            continue
        ca, cb = _csvs(a), _csvs(b)
        checked += len(ca)
        same.append(code_a == code_b and bool(ca) and ca == cb)
    elapsed = time.perf_counter() - t0
    ok = all(same)
    detail = (f"{sum(same)}/{len(same)} subcommands reproduce from their persisted config "
              f"({checked} CSV files compared, wall-clock columns excluded)")
    record(9, ok, detail, elapsed)
    assert ok, detail


# ---------------------------------------------------------------- 10


def test_c10_heavyhex_smoke():
    if not os.environ.get("PEPSVQE_LONG"):
        RESULTS[10] = ("criterion 10: NOT RUN  long-running and not CI-gated; "
                       "run scripts/heavyhex_smoke.py (or set PEPSVQE_LONG=1)")
        pytest.skip("long-running; set PEPSVQE_LONG=1")
    t0 = time.perf_counter()
    res = subprocess.run([sys.executable, str(ROOT / "scripts" / "heavyhex_smoke.py"), "--json"],
                         capture_output=True, text=True)
    doc = json.loads(res.stdout.strip().splitlines()[-1])
    ok = res.returncode == 0 and doc["trend_ok"]
    record(10, ok, f"heavyhex-28 g=1.5 chi=8: dE by D {doc['rel_error']} (decreasing: {doc['trend_ok']})",
           time.perf_counter() - t0)
    assert ok
