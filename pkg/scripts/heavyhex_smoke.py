"""Heavyhex smoke run: optimisation error against an ITE reference versus circuit depth.

Expected trend: on heavyhex:28 at g = 1.5 with chi = 8, the relative error
dE = |E_VQE - E_ITE| / |E_ITE| at D = 2 (warm-started from D = 1) is below the
D = 1 value. Absolute errors are implementation-dependent; only the ordering
is checked. Typical runtime is tens of minutes on one core.

With --rmax-chi the script also scans the energy variance around the D = 2
optimum with the SU evaluator at chi = 8 and chi = 16 and reports whether
r_max agrees between them within one grid step. This is the chi-convergence
check for heavyhex landscapes; large radii may stay unconverged in chi.

    python scripts/heavyhex_smoke.py [--json] [--rmax-chi] [--max-iters N]
"""

import argparse
import json
import logging
import time

import torch

from pepsvqe.circuit import warm_start_extend
from pepsvqe.landscape import find_rmax, parse_r_grid, unconverged_radii, variance_scan
from pepsvqe.lattice import parse_lattice
from pepsvqe.optimize import Evaluator, initial_parameters, minimize
from pepsvqe.peps import imaginary_time_evolve


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--lattice", default="heavyhex:28")
    ap.add_argument("--g", type=float, default=1.5)
    ap.add_argument("--chi", type=int, default=8)
    ap.add_argument("--depths", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--max-iters", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rmax-chi", action="store_true", help="also compare r_max at chi and 2*chi")
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--json", action="store_true", help="print one JSON summary line at the end")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    torch.set_num_threads(1)
    lat = parse_lattice(args.lattice)

    t0 = time.perf_counter()
    ite = imaginary_time_evolve(lat, args.g, args.chi)
    logging.info("ITE reference E=%.10g converged=%s (%.0f s)", ite.energy, ite.converged, time.perf_counter() - t0)

    rel, theta, ev_prev = [], None, None
    for depth in args.depths:
        ev = Evaluator(lat, depth, args.g, method="su", chi=args.chi)
        if theta is None:
            theta0 = initial_parameters("small-random", ev.n_params, args.seed)
        else:
            theta0 = warm_start_extend(theta, ev_prev.spec, ev.spec)
        theta, trace = minimize(theta0, ev, max_iters=args.max_iters)
        e = min(trace.energies)
        rel.append(abs(e - ite.energy) / abs(ite.energy))
        logging.info("D=%d E=%.10g dE=%.3e status=%s (%.0f s)", depth, e, rel[-1], trace.status,
                     time.perf_counter() - t0)
        ev_prev = ev
    trend_ok = all(b < a for a, b in zip(rel, rel[1:]))
    summary = {"lattice": args.lattice, "g": args.g, "chi": args.chi, "depths": args.depths,
               "ite_energy": ite.energy, "ite_converged": ite.converged, "rel_error": rel, "trend_ok": trend_ok}

    if args.rmax_chi:
        grid = parse_r_grid("log:1e-2:pi:16")
        scans = [variance_scan(theta, ev_prev.spec, ev_prev.with_(chi=c), grid, args.samples, args.seed)
                 for c in (args.chi, 2 * args.chi)]
        r = [find_rmax(s).r_max for s in scans]
        step = float(grid[1] / grid[0])
        summary["r_max"] = r
        summary["r_max_stable"] = bool(max(r) / min(r) <= step * (1 + 1e-9))
        summary["unconverged_radii"] = [float(x) for x, bad in zip(grid, unconverged_radii(*scans)) if bad]
        logging.info("r_max chi=%d: %.4g, chi=%d: %.4g", args.chi, r[0], 2 * args.chi, r[1])

    print(f"dE by depth {dict(zip(args.depths, (f'{x:.3e}' for x in rel)))}; decreasing: {trend_ok}")
    if args.json:
        print(json.dumps(summary))
    return 0 if trend_ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
