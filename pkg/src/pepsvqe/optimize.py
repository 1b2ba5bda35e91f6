"""Energy evaluators, reverse-mode gradients and L-BFGS minimisation."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.optimize
import torch

from .circuit import CircuitSpec, build_circuit, warm_start_extend
from .hamiltonian import TfimHamiltonian, default_method, energy, relative_error
from .lattice import Lattice
from .peps import apply_circuit, init_product_state
from .peps.state import LOCAL_STATES
from .statevector import product_state, run_circuit

log = logging.getLogger(__name__)

INIT_POLICIES = ("zeros", "small-random", "uniform-random")
SMALL_RANDOM_HALF_WIDTH = 0.1


@dataclass
class Evaluator:
    """``theta -> E(theta)`` through a chosen simulation pipeline.

    ``method`` is ``"su"``, ``"boundary"`` or ``"statevector"``; ``chi_e``
    defaults to ``chi**2`` for boundary contraction.
    """

    lattice: Lattice
    depth: int
    g: float
    method: str = "su"
    chi: int = 4
    chi_e: int | None = None
    regauge: bool = True
    initial: str = "zero"
    checkpoint_layers: bool = True

    def __post_init__(self):
        if self.method == "auto":
            self.method = default_method(self.lattice)
        if self.method not in ("su", "boundary", "statevector"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "boundary" and self.chi_e is None:
            self.chi_e = self.chi * self.chi
        if self.initial not in LOCAL_STATES:
            raise ValueError(f"unknown initial state {self.initial!r}")

    @cached_property
    def spec(self) -> CircuitSpec:
        return build_circuit(self.lattice, self.depth)

    @cached_property
    def hamiltonian(self) -> TfimHamiltonian:
        return TfimHamiltonian(self.lattice, self.g)

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    def describe(self) -> dict:
        return {
            "lattice": self.lattice.name,
            "depth": self.depth,
            "g": self.g,
            "method": self.method,
            "chi": self.chi,
            "chi_e": self.chi_e,
            "regauge": self.regauge,
            "initial": self.initial,
        }

    def with_(self, **changes) -> "Evaluator":
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw.update(changes)
        return Evaluator(**kw)

    def energy_tensor(self, theta: torch.Tensor) -> torch.Tensor:
        if self.method == "statevector":
            psi = run_circuit(self.spec, theta, product_state(self.lattice.n_sites, LOCAL_STATES[self.initial]))
            return energy(psi, self.hamiltonian, "statevector")
        state0 = init_product_state(self.lattice, self.initial)
        state, _ = apply_circuit(state0, self.spec, theta, self.chi, self.regauge, checkpoint_layers=self.checkpoint_layers)
        return energy(state, self.hamiltonian, self.method, chi_e=self.chi_e)

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.n_params:
            raise ValueError(f"theta has {theta.shape[-1]} entries, expected {self.n_params}")
        return theta

    def __call__(self, theta) -> float:
        theta = self._check(theta)
        with torch.no_grad():
            return float(self.energy_tensor(torch.from_numpy(theta)))

    def energies(self, thetas) -> np.ndarray:
        """Energies for a batch ``(B, n_params)``; vectorised for the statevector method."""
        thetas = np.atleast_2d(self._check(thetas))
        if self.method != "statevector":
            return np.array([self(t) for t in thetas])
        per = max(1, (1 << 19) >> self.lattice.n_sites)  # keeps the working set cache-sized
        out = []
        with torch.no_grad():
            for k in range(0, len(thetas), per):
                out.append(self.energy_tensor(torch.from_numpy(thetas[k: k + per])).numpy())
        return np.concatenate(out)

    def energy_and_grad(self, theta) -> tuple[float, np.ndarray]:
        theta = torch.tensor(self._check(theta), requires_grad=True)
        with torch.enable_grad():
            e = self.energy_tensor(theta)
            (grad,) = torch.autograd.grad(e, theta)
        return float(e.detach()), grad.numpy().copy()


def gradient(theta, evaluator: Evaluator) -> np.ndarray:
    """Reverse-mode gradient of the evaluator's energy."""
    return evaluator.energy_and_grad(theta)[1]


def finite_difference_gradient(theta, f: Callable[[np.ndarray], float], step: float = 1e-5) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        out[k] = (f(theta + e) - f(theta - e)) / (2 * step)
    return out


@dataclass
class OptimizationTrace:
    energies: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    theta_opt: np.ndarray | None = None
    status: str = "running"
    message: str = ""
    n_evals: int = 0

    @property
    def final_energy(self) -> float:
        return self.energies[-1]

    def rows(self):
        for k, (e, gn, t) in enumerate(zip(self.energies, self.grad_norms, self.times)):
            yield {"iteration": k, "energy": e, "grad_norm": gn, "wall_clock": t}


def _status(res) -> str:
    msg = str(res.message).upper()
    if "PGTOL" in msg or "PROJ" in msg:
        return "converged"
    if res.nit >= res.get("maxiter", np.inf) or "LIMIT" in msg or "MAXITER" in msg:
        return "max_iters"
    if "ABNORMAL" in msg or "LNSRCH" in msg:
        return "line_search_failed"
    if "REL_REDUCTION" in msg or "FACTR" in msg:
        return "converged_ftol"
    return "converged" if res.success else "failed"


def minimize(
    theta0,
    evaluator,
    max_iters: int = 200,
    gtol: float = 1e-6,
    ftol: float = 1e-15,
    bounds=None,
) -> tuple[np.ndarray, OptimizationTrace]:
    """L-BFGS-B on ``evaluator``.

    ``evaluator`` is an :class:`Evaluator` or any callable returning
    ``(value, gradient)``. The trace records every accepted iterate; the
    returned parameters are the lowest-energy point evaluated.
    """
    if gtol <= 0:
        raise ValueError("gtol must be positive")
    fun = evaluator.energy_and_grad if hasattr(evaluator, "energy_and_grad") else evaluator
    theta0 = np.asarray(theta0, dtype=float).copy()
    trace = OptimizationTrace()
    t_start = time.perf_counter()
    best = {"f": np.inf, "x": theta0}
    last = {}

    def wrapped(x):
        f, gr = fun(x)
        trace.n_evals += 1
        if not np.isfinite(f):
            raise FloatingPointError("non-finite energy during optimisation")
        if f < best["f"]:
            best["f"], best["x"] = f, x.copy()
        last["x"], last["f"], last["g"] = x.copy(), f, gr
        return f, gr

    f0, g0 = wrapped(theta0)
    trace.energies.append(f0)
    trace.grad_norms.append(float(np.linalg.norm(g0)))
    trace.times.append(time.perf_counter() - t_start)

    def callback(intermediate_result):
        trace.energies.append(float(intermediate_result.fun))
        gn = float(np.linalg.norm(last["g"])) if np.array_equal(last["x"], intermediate_result.x) else float("nan")
        trace.grad_norms.append(gn)
        trace.times.append(time.perf_counter() - t_start)

    if float(np.max(np.abs(g0), initial=0.0)) < gtol:
        trace.theta_opt, trace.status = theta0, "converged"
        return theta0, trace
    res = scipy.optimize.minimize(
        wrapped,
        theta0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        callback=callback,
        options={"maxiter": max_iters, "gtol": gtol, "ftol": ftol},
    )
    res["maxiter"] = max_iters
    trace.status = _status(res)
    trace.message = str(res.message)
    trace.theta_opt = best["x"]
    if best["f"] < trace.energies[-1]:
        trace.energies.append(best["f"])
        trace.grad_norms.append(float("nan"))
        trace.times.append(time.perf_counter() - t_start)
    return best["x"], trace


def initial_parameters(policy: str, n_params: int, seed: int, spec: CircuitSpec | None = None) -> np.ndarray:
    """Starting angles for ``zeros``, ``small-random``, ``uniform-random`` or ``warm:PATH``."""
    if policy.startswith("warm:"):
        from .circuit import load_params

        if spec is None:
            raise ValueError("warm start needs the target circuit")
        spec_opt, theta_opt, _ = load_params(policy[5:], spec.lattice)
        return warm_start_extend(theta_opt, spec_opt, spec)
    rng = np.random.default_rng(seed)
    if policy == "zeros":
        return np.zeros(n_params)
    if policy == "small-random":
        return rng.uniform(-SMALL_RANDOM_HALF_WIDTH, SMALL_RANDOM_HALF_WIDTH, n_params)
    if policy == "uniform-random":
        return rng.uniform(-np.pi, np.pi, n_params)
    raise ValueError(f"unknown init policy {policy!r}; expected one of {INIT_POLICIES} or warm:PATH")


def reference_energy(lattice: Lattice, g: float, chi: int = 8) -> tuple[float, str]:
    """Exact (Lanczos) ground energy when feasible, converged SU-ITE otherwise."""
    from .peps import imaginary_time_evolve
    from .statevector import MAX_LANCZOS_QUBITS, exact_ground_energy

    if lattice.n_sites <= MAX_LANCZOS_QUBITS:
        return exact_ground_energy(lattice, g), "lanczos"
    res = imaginary_time_evolve(lattice, g, chi)
    return res.energy, "ite" if res.converged else "ite-unconverged"


def optimize_sweep(
    lattice: Lattice,
    g_list,
    depth_list,
    chi: int,
    seed: int = 0,
    method: str = "auto",
    init: str = "small-random",
    max_iters: int = 200,
    gtol: float = 1e-6,
    chi_e: int | None = None,
    reference_chi: int | None = None,
    regauge: bool = True,
    initial: str = "zero",
    on_cell: Callable | None = None,
) -> list[dict]:
    """Optimise every ``(g, D)`` cell; failures are recorded and the sweep continues.

    ``on_cell(row, theta_opt, trace, evaluator)`` is called after each
    successful cell.
    """
    g_list, depth_list = list(g_list), list(depth_list)
    if not g_list or not depth_list:
        raise ValueError("g_list and depth_list must be non-empty")
    rows = []
    for g in g_list:
        try:
            e_ref, ref_kind = reference_energy(lattice, g, reference_chi or chi)
        except Exception as exc:  # reference failure is recorded per g
            log.error("reference energy failed for g=%g: %s", g, exc)
            e_ref, ref_kind = float("nan"), f"failed: {exc}"
        for depth in depth_list:
            row = {"g": g, "depth": depth, "energy": float("nan"), "reference": e_ref, "reference_kind": ref_kind,
                   "rel_error": float("nan"), "status": "", "iterations": 0}
            try:
                ev = Evaluator(lattice, depth, g, method=method, chi=chi, chi_e=chi_e, regauge=regauge, initial=initial)
                theta0 = initial_parameters(init, ev.n_params, seed, ev.spec)
                theta, trace = minimize(theta0, ev, max_iters=max_iters, gtol=gtol)
                e = min(trace.energies)
                row.update(energy=e, status=trace.status, iterations=len(trace.energies) - 1)
                if np.isfinite(e_ref) and e_ref != 0:
                    row["rel_error"] = relative_error(e, e_ref)
                log.info("g=%g D=%d E=%.10g dE=%.3e (%s)", g, depth, e, row["rel_error"], trace.status)
                if on_cell is not None:
                    on_cell(row, theta, trace, ev)
            except Exception as exc:
                log.error("sweep cell g=%g D=%d failed: %s", g, depth, exc)
                row["status"] = f"failed: {type(exc).__name__}: {exc}"
            rows.append(row)
    return rows
