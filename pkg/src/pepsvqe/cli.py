"""Command-line entry point: ``pepsvqe {optimize,diagnose,scaling,ite-reference,validate,plot}``."""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from importlib import metadata
from pathlib import Path

import numpy as np
import torch

from .lattice import parse_lattice, validate
from .tensor import KernelError

log = logging.getLogger("pepsvqe")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_UNCONVERGED = 0, 2, 3, 4
OUT_ENV = "PEPSVQE_OUT"
SUBCOMMANDS = ("optimize", "diagnose", "scaling", "ite-reference", "validate", "plot")

DEFAULTS = {
    "lattice": "square:3x3",
    "seed": 0,
    "out": None,
    "threads": None,
    "model": {"g": [1.0]},
    "circuit": {"depth": [2], "warm_depth": 2, "depth_total": 6},
    "tn": {"chi": 4, "chi_e_rule": "square", "regauge": True, "method": "auto", "initial": "zero"},
    "optimizer": {"max_iters": 200, "gtol": 1e-6, "init": "small-random"},
    "diagnostics": {"warm": None, "r_grid": "log:1e-3:pi:24", "n_samples": 1000, "evaluator": "statevector"},
    "scaling": {"warm": None, "n_points": 10, "chi_list": [2, 3, 4, 5, 6], "reference": "statevector",
                "rmax": None, "rmax_from": None, "method": "auto"},
    "ite": {"chi": 4, "schedule": [0.1, 0.05, 0.01, 0.005], "max_sweeps": 2000, "energy_tol": 1e-8},
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config


def _check_type(path: str, value, default):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            value = [value]
        return [_check_type(f"{path}[]", v, default[0]) for v in value] if default else value
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def merge(base: dict, override: dict, path: str = "") -> dict:
    """Deep-merge ``override`` into a copy of ``base``; unknown keys are rejected."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in DEFAULTS_FLAT_SECTIONS.get(path, base):
            raise ConfigError(f"unknown config key {where!r}")
        default = _default_at(where)
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected a section, got {value!r}")
            out[key] = merge(out[key], value, f"{where}.")
        else:
            out[key] = _check_type(where, value, default)
    return out


def _default_at(dotted: str):
    node = DEFAULTS
    for part in dotted.split("."):
        node = node[part]
    return node


DEFAULTS_FLAT_SECTIONS = {f"{k}.": v for k, v in DEFAULTS.items() if isinstance(v, dict)}


def validate_config(cfg: dict) -> dict:
    try:
        lat = parse_lattice(cfg["lattice"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not cfg["model"]["g"]:
        raise ConfigError("model.g must be non-empty")
    depths = cfg["circuit"]["depth"]
    if not depths or any(d < 1 for d in depths):
        raise ConfigError("circuit.depth must be a non-empty list of positive integers")
    if cfg["circuit"]["warm_depth"] < 1 or cfg["circuit"]["depth_total"] < 1:
        raise ConfigError("circuit depths must be positive")
    tn = cfg["tn"]
    if tn["chi"] < 1:
        raise ConfigError("tn.chi must be >= 1")
    if tn["method"] not in ("auto", "su", "boundary", "statevector"):
        raise ConfigError(f"tn.method {tn['method']!r} is not one of auto, su, boundary, statevector")
    if tn["method"] == "boundary" and not lat.is_square():
        raise ConfigError("boundary contraction needs a square lattice")
    if tn["initial"] not in ("zero", "plus"):
        raise ConfigError("tn.initial must be 'zero' or 'plus'")
    rule = tn["chi_e_rule"]
    if not (rule == "square" or (rule.startswith("fixed:") and rule[6:].isdigit() and int(rule[6:]) > 0)):
        raise ConfigError(f"tn.chi_e_rule {rule!r} must be 'square' or 'fixed:K'")
    opt = cfg["optimizer"]
    if opt["max_iters"] < 0 or opt["gtol"] <= 0:
        raise ConfigError("optimizer.max_iters must be >= 0 and optimizer.gtol > 0")
    init = opt["init"]
    if init not in ("zeros", "small-random", "uniform-random") and not init.startswith("warm:"):
        raise ConfigError(f"optimizer.init {init!r} must be zeros, small-random, uniform-random or warm:PATH")
    diag = cfg["diagnostics"]
    if diag["n_samples"] < 2:
        raise ConfigError("diagnostics.n_samples must be >= 2")
    if diag["evaluator"] not in ("statevector", "su", "boundary"):
        raise ConfigError("diagnostics.evaluator must be statevector, su or boundary")
    try:
        from .landscape import parse_r_grid

        grid = parse_r_grid(diag["r_grid"])
    except ValueError as exc:
        raise ConfigError(f"diagnostics.r_grid: {exc}") from None
    if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ConfigError("diagnostics.r_grid must be non-negative and strictly ascending")
    sc = cfg["scaling"]
    if sc["n_points"] < 1:
        raise ConfigError("scaling.n_points must be >= 1")
    if not sc["chi_list"] or any(b <= a for a, b in zip(sc["chi_list"], sc["chi_list"][1:])):
        raise ConfigError("scaling.chi_list must be strictly ascending")
    if sc["reference"] not in ("statevector", "converged-tn"):
        raise ConfigError("scaling.reference must be statevector or converged-tn")
    if sc["method"] not in ("auto", "su", "boundary"):
        raise ConfigError("scaling.method must be auto, su or boundary")
    ite = cfg["ite"]
    if ite["chi"] < 1 or ite["max_sweeps"] < 1 or ite["energy_tol"] <= 0 or not ite["schedule"]:
        raise ConfigError("invalid ite section")
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    return cfg


def load_config_file(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    doc.pop("_meta", None)
    return doc


def dump_config(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


def parse_config_text(text: str) -> dict:
    doc = json.loads(text)
    doc.pop("_meta", None)
    return validate_config(merge(DEFAULTS, doc))


# ---------------------------------------------------------------- argparse


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# flag dest -> config path
FLAG_MAP = {
    "lattice": "lattice",
    "seed": "seed",
    "out": "out",
    "threads": "threads",
    "g": "model.g",
    "depth": "circuit.depth",
    "warm_depth": "circuit.warm_depth",
    "depth_total": "circuit.depth_total",
    "chi": "tn.chi",
    "chie_rule": "tn.chi_e_rule",
    "regauge": "tn.regauge",
    "method": "tn.method",
    "initial": "tn.initial",
    "max_iters": "optimizer.max_iters",
    "gtol": "optimizer.gtol",
    "init": "optimizer.init",
    "r_grid": "diagnostics.r_grid",
    "samples": "diagnostics.n_samples",
    "evaluator": "diagnostics.evaluator",
    "points": "scaling.n_points",
    "chi_list": "scaling.chi_list",
    "reference": "scaling.reference",
    "rmax": "scaling.rmax",
    "rmax_from": "scaling.rmax_from",
    "scaling_method": "scaling.method",
    "ite_chi": "ite.chi",
    "max_sweeps": "ite.max_sweeps",
    "energy_tol": "ite.energy_tol",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; CLI flags override it")
    common.add_argument("--lattice", help="square:RxC, chain:N or heavyhex:N")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help=f"output directory (default: ${OUT_ENV}/<subcommand> or runs/<subcommand>)")
    common.add_argument("--threads", type=int, help="intra-op threads (default: all cores)")
    common.add_argument("--log-level", default="INFO")
    tn = argparse.ArgumentParser(add_help=False)
    tn.add_argument("--chi", type=int)
    tn.add_argument("--chie-rule", help="square | fixed:K")
    tn.add_argument("--regauge", type=_bool)
    tn.add_argument("--initial", choices=("zero", "plus"))

    p = _Parser(prog="pepsvqe", description="PEPS simulation of brickwall SO(4) VQE circuits for the TFIM.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    o = sub.add_parser("optimize", parents=[common, tn], help="L-BFGS VQE optimisation (sweeps over g and depth)")
    o.add_argument("--g", type=float, nargs="+")
    o.add_argument("--depth", type=int, nargs="+")
    o.add_argument("--method", choices=("auto", "su", "boundary", "statevector"))
    o.add_argument("--max-iters", type=int)
    o.add_argument("--gtol", type=float)
    o.add_argument("--init", help="zeros | small-random | uniform-random | warm:PATH")

    d = sub.add_parser("diagnose", parents=[common, tn], help="energy-variance scan around a warm start")
    d.add_argument("--warm", required=True, help="checkpoint from optimize")
    d.add_argument("--depth-total", type=int)
    d.add_argument("--r-grid", help="log:a:b:n, lin:a:b:n or comma list (pi allowed)")
    d.add_argument("--samples", type=int)
    d.add_argument("--fast", action="store_true", help="use 200 samples per radius")
    d.add_argument("--evaluator", choices=("statevector", "su", "boundary"))

    s = sub.add_parser("scaling", parents=[common, tn], help="error-versus-time benchmark and power-law fit")
    s.add_argument("--warm", required=True)
    s.add_argument("--depth-total", type=int)
    s.add_argument("--rmax", type=float)
    s.add_argument("--rmax-from", help="rmax.json or scan.json written by diagnose")
    s.add_argument("--points", type=int)
    s.add_argument("--chi-list", type=_int_list, help="e.g. 2,3,4 or 2..6")
    s.add_argument("--reference", choices=("statevector", "converged-tn"))
    s.add_argument("--method", dest="scaling_method", choices=("auto", "su", "boundary"))

    i = sub.add_parser("ite-reference", parents=[common], help="imaginary-time reference energy")
    i.add_argument("--g", type=float, nargs="+")
    i.add_argument("--chi", dest="ite_chi", type=int)
    i.add_argument("--max-sweeps", type=int)
    i.add_argument("--energy-tol", type=float)

    sub.add_parser("validate", parents=[common], help="check lattice invariants and the resolved config")

    pl = sub.add_parser("plot", help="render a result CSV as SVG")
    pl.add_argument("csv")
    pl.add_argument("--kind", choices=("line", "loglog"), default="line")
    pl.add_argument("--x")
    pl.add_argument("--y")
    pl.add_argument("--series")
    pl.add_argument("--output", "-o", required=True)
    pl.add_argument("--log-level", default="INFO")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        cfg = merge(cfg, load_config_file(args.config))
    flags: dict = {}
    for dest, path in FLAG_MAP.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        node = flags
        *head, last = path.split(".")
        for part in head:
            node = node.setdefault(part, {})
        node[last] = value
    if getattr(args, "fast", False):
        flags.setdefault("diagnostics", {})["n_samples"] = 200
    if getattr(args, "warm", None):
        flags.setdefault("diagnostics" if args.command == "diagnose" else "scaling", {})["warm"] = args.warm
    cfg = merge(cfg, flags)
    if cfg["out"] is None:
        cfg["out"] = str(Path(os.environ.get(OUT_ENV, "runs")) / args.command)
    return validate_config(cfg)


# ---------------------------------------------------------------- commands


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _write_metadata(out: Path, command: str, cfg: dict, **extra) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(dump_config(cfg))
    meta = {"command": command, "version": _version(), "torch": torch.__version__, "numpy": np.__version__,
            "threads": torch.get_num_threads(), "config": cfg, **extra}
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


def _evaluator_kwargs(cfg: dict, lat) -> dict:
    from .scaling import chi_e_for

    tn = cfg["tn"]
    method = tn["method"]
    if method == "auto":
        from .hamiltonian import default_method

        method = default_method(lat)
    chi_e = chi_e_for(tn["chi_e_rule"], tn["chi"]) if method == "boundary" else None
    return {"method": method, "chi": tn["chi"], "chi_e": chi_e, "regauge": tn["regauge"], "initial": tn["initial"]}


def cmd_optimize(cfg: dict) -> int:
    from .circuit import save_params
    from .landscape import write_rows
    from .optimize import optimize_sweep
    from .plotting import emit_plot

    lat = parse_lattice(cfg["lattice"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    gs, depths = cfg["model"]["g"], cfg["circuit"]["depth"]
    single = len(gs) == 1 and len(depths) == 1
    kw = _evaluator_kwargs(cfg, lat)

    def on_cell(row, theta, trace, ev):
        cell = out if single else out / f"g{row['g']:g}_D{row['depth']}"
        cell.mkdir(parents=True, exist_ok=True)
        write_rows(cell / "trace.csv", list(trace.rows()))
        save_params(cell / "theta_opt.json", ev.spec, theta, g=ev.g, energy=row["energy"], evaluator=ev.describe())

    rows = optimize_sweep(
        lat, gs, depths, kw["chi"], seed=cfg["seed"], method=kw["method"], init=cfg["optimizer"]["init"],
        max_iters=cfg["optimizer"]["max_iters"], gtol=cfg["optimizer"]["gtol"], chi_e=kw["chi_e"],
        reference_chi=cfg["ite"]["chi"], regauge=kw["regauge"], initial=kw["initial"], on_cell=on_cell,
    )
    write_rows(out / "sweep.csv", rows)
    for row in rows:
        log.info("g=%g D=%d E=%.10g ref=%.10g (%s) dE=%.3e status=%s", row["g"], row["depth"], row["energy"],
                 row["reference"], row["reference_kind"], row["rel_error"], row["status"])
    if single and (out / "trace.csv").exists():
        emit_plot(out / "trace.csv", "line", out / "trace.svg")
    elif not single:
        emit_plot(out / "sweep.csv", "line", out / "sweep.svg")
    _write_metadata(out, "optimize", cfg)
    failed = [r for r in rows if r["status"].startswith("failed")]
    if failed:
        return EXIT_NUMERICAL
    if any(r["reference_kind"] == "ite-unconverged" for r in rows):
        return EXIT_UNCONVERGED
    return EXIT_OK


def _warm_evaluator(cfg: dict, warm: str, method: str):
    from .circuit import build_circuit, load_params, warm_start_extend
    from .optimize import Evaluator

    spec_opt, theta_opt, doc = load_params(warm)
    lat = spec_opt.lattice
    depth = cfg["circuit"]["depth_total"]
    spec = build_circuit(lat, depth)
    theta = warm_start_extend(theta_opt, spec_opt, spec)
    g = float(doc.get("g", cfg["model"]["g"][0]))
    kw = _evaluator_kwargs(cfg, lat)
    kw["method"] = method if method != "auto" else kw["method"]
    if kw["method"] == "boundary" and kw["chi_e"] is None:
        from .scaling import chi_e_for

        kw["chi_e"] = chi_e_for(cfg["tn"]["chi_e_rule"], kw["chi"])
    if kw["method"] != "boundary":
        kw["chi_e"] = None
    return Evaluator(lat, depth, g, **kw), spec, theta, spec_opt


def cmd_diagnose(cfg: dict) -> int:
    from .landscape import find_rmax, parse_r_grid, save_scan, variance_scan
    from .plotting import emit_plot

    diag = cfg["diagnostics"]
    ev, spec, theta, spec_opt = _warm_evaluator(cfg, diag["warm"], diag["evaluator"])
    scan = variance_scan(theta, spec, ev, parse_r_grid(diag["r_grid"]), diag["n_samples"], cfg["seed"])
    scan.spec_header["warm_depth"] = spec_opt.depth
    out = Path(cfg["out"])
    rm = find_rmax(scan)
    save_scan(scan, rm, out)
    emit_plot(out / "scan.csv", "loglog", out / "scan.svg", title=f"Var(E) around warm start, {ev.lattice.name}")
    log.info("r_max = %.6g (Var = %.6g)", rm.r_max, rm.variance)
    _write_metadata(out, "diagnose", cfg)
    return EXIT_OK


def _rmax_from(path: str) -> float:
    doc = json.loads(Path(path).read_text())
    if "r_max" in doc:
        return float(doc["r_max"])
    if "r_grid" in doc and "variances" in doc:
        from .landscape import VarianceScan, find_rmax

        return find_rmax(VarianceScan(**doc)).r_max
    raise ConfigError(f"{path}: neither an r_max result nor a variance scan")


def cmd_scaling(cfg: dict) -> int:
    from .plotting import emit_plot
    from .scaling import fit_power_law, quantum_baseline, scaling_benchmark

    sc = cfg["scaling"]
    method = sc["method"]
    ev, spec, theta, _ = _warm_evaluator(cfg, sc["warm"], method)
    if ev.method == "statevector":
        raise ConfigError("scaling needs a tensor-network method (su or boundary)")
    if sc["rmax"] is not None:
        r_max = float(sc["rmax"])
    elif sc["rmax_from"] is not None:
        r_max = _rmax_from(sc["rmax_from"])
    else:
        raise ConfigError("scaling needs --rmax or --rmax-from")
    torch.set_num_threads(1)
    run = scaling_benchmark(theta, ev, r_max, sc["n_points"], sc["chi_list"], sc["reference"], cfg["seed"],
                            chie_rule=cfg["tn"]["chi_e_rule"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    run.write_csv(out / "points.csv")
    fit_doc: dict = {"r_max": r_max, "reference": sc["reference"], "reference_ok": run.reference_ok, "notes": run.notes}
    try:
        fit = fit_power_law(run.points, "square" if ev.method == "boundary" else "all")
        fit_doc.update(fit.to_dict())
        t_grid, eps = quantum_baseline(run.points)
        fit_doc["baseline_c"] = float(eps[0] * np.sqrt(t_grid[0]))
        log.info("alpha=%.4g beta=%.4f verdict=%s", fit.alpha, fit.beta, fit.verdict)
    except ValueError as exc:
        fit_doc["error"] = str(exc)
        log.warning("power-law fit skipped: %s", exc)
    (out / "fit.json").write_text(json.dumps(fit_doc, indent=2, sort_keys=True) + "\n")
    emit_plot(out / "points.csv", "loglog", out / "scaling.svg", title=f"TN error vs time, {ev.lattice.name}")
    _write_metadata(out, "scaling", cfg)
    return EXIT_OK if run.reference_ok else EXIT_UNCONVERGED


def cmd_ite(cfg: dict) -> int:
    from .landscape import write_rows
    from .peps import imaginary_time_evolve
    from .statevector import MAX_LANCZOS_QUBITS, exact_ground_energy

    lat = parse_lattice(cfg["lattice"])
    ite = cfg["ite"]
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    rows, history = [], []
    ok = True
    for g in cfg["model"]["g"]:
        res = imaginary_time_evolve(lat, g, ite["chi"], ite["schedule"], ite["max_sweeps"], ite["energy_tol"])
        exact = exact_ground_energy(lat, g) if lat.n_sites <= MAX_LANCZOS_QUBITS else float("nan")
        rel = abs(res.energy - exact) / abs(exact) if np.isfinite(exact) else float("nan")
        rows.append({"g": g, "energy": res.energy, "converged": int(res.converged), "sweeps": res.sweeps,
                     "exact": exact, "rel_error": rel})
        history += [{"g": g, "dtau": d, "sweep": k, "energy": e} for d, k, e in res.history]
        ok &= res.converged
        log.info("g=%g E_ITE=%.10g converged=%s exact=%.10g", g, res.energy, res.converged, exact)
    write_rows(out / "ite.csv", rows)
    if history:
        write_rows(out / "ite_history.csv", history)
    _write_metadata(out, "ite-reference", cfg)
    return EXIT_OK if ok else EXIT_UNCONVERGED


def cmd_validate(cfg: dict) -> int:
    lat = parse_lattice(cfg["lattice"])
    problems = validate(lat)
    for p in problems:
        print(f"violation: {p}")
    print(f"{lat.name}: {lat.n_sites} sites, {len(lat.edges)} edges, {len(lat.groups)} brickwall groups, "
          f"max degree {lat.max_degree}")
    print(dump_config(cfg), end="")
    return EXIT_OK if not problems else EXIT_CONFIG


COMMANDS = {"optimize": cmd_optimize, "diagnose": cmd_diagnose, "scaling": cmd_scaling,
            "ite-reference": cmd_ite, "validate": cmd_validate}


def run(command: str, cfg: dict) -> int:
    if cfg["threads"] is not None:
        torch.set_num_threads(cfg["threads"])
    return COMMANDS[command](cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot":
            from .plotting import PlotError, emit_plot

            try:
                emit_plot(args.csv, args.kind, args.output, args.x, args.y, args.series)
            except (PlotError, FileNotFoundError) as exc:
                print(f"pepsvqe plot: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            return EXIT_OK
        cfg = resolve_config(args)
        return run(args.command, cfg)
    except ConfigError as exc:
        print(f"pepsvqe: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, KernelError, np.linalg.LinAlgError, torch.linalg.LinAlgError) as exc:
        print(f"pepsvqe: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"pepsvqe: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
