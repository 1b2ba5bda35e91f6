import numpy as np
import pytest
import torch

from pepsvqe.circuit import build_circuit, save_params, warm_start_extend
from pepsvqe.hamiltonian import TfimHamiltonian, energy
from pepsvqe.lattice import build_square, parse_lattice
from pepsvqe.optimize import (
    Evaluator,
    finite_difference_gradient,
    gradient,
    initial_parameters,
    minimize,
    optimize_sweep,
)
from pepsvqe.peps import apply_circuit, init_product_state


def max_rel_error(a, b):
    scale = max(np.abs(b).max(), 1e-12)
    return float(np.abs(a - b).max() / scale)


def test_quadratic_converges(rng):
    n = 8
    m = rng.normal(size=(n, n))
    a_mat = m @ m.T + n * np.eye(n)
    a = rng.normal(size=n)

    def f(x):
        d = x - a
        return float(d @ a_mat @ d), 2 * a_mat @ d

    x, trace = minimize(np.zeros(n), f, max_iters=100, gtol=1e-10)
    assert np.abs(x - a).max() < 1e-8
    assert len(trace.energies) - 1 < 50
    assert trace.status.startswith("converged")


def test_accepted_energies_monotone(rng):
    ev = Evaluator(build_square(2, 2), 1, 1.0, method="boundary", chi=4)
    _, trace = minimize(initial_parameters("small-random", ev.n_params, 0), ev, max_iters=15)
    e = np.array(trace.energies)
    assert np.all(np.diff(e) <= 1e-12)
    assert len(trace.grad_norms) == len(trace.times) == len(e)


def test_never_worse_than_start(rng):
    ev = Evaluator(parse_lattice("chain:4"), 2, 1.0, method="su", chi=4)
    for k in range(3):
        theta0 = rng.uniform(-np.pi, np.pi, ev.n_params)
        x, trace = minimize(theta0, ev, max_iters=5)
        assert ev(x) <= ev(theta0) + 1e-12


def test_gtol_must_be_positive():
    with pytest.raises(ValueError):
        minimize(np.zeros(2), lambda x: (0.0, np.zeros(2)), gtol=0)


def test_symmetric_point_gradient():
    ev = Evaluator(build_square(2, 2), 2, 0.0, method="boundary", chi=4)
    theta = np.zeros(ev.n_params)
    g = gradient(theta, ev)
    fd = finite_difference_gradient(theta, ev)
    assert np.abs(g).max() < 1e-10
    assert np.abs(fd).max() < 1e-8


@pytest.mark.parametrize("k", range(3))
def test_gradient_matches_fd_untruncated(k):
    ev = Evaluator(build_square(2, 3), 1, 1.3, method="boundary", chi=8, chi_e=64)
    theta = np.random.default_rng([21, k]).uniform(-np.pi, np.pi, ev.n_params)
    assert max_rel_error(gradient(theta, ev), finite_difference_gradient(theta, ev)) < 1e-5


def test_gradient_matches_fd_chain():
    ev = Evaluator(parse_lattice("chain:5"), 2, 0.8, method="su", chi=8)
    theta = np.random.default_rng([22, 0]).uniform(-np.pi, np.pi, ev.n_params)
    assert max_rel_error(gradient(theta, ev), finite_difference_gradient(theta, ev)) < 1e-5


def test_gradient_matches_fd_truncated():
    ev = Evaluator(build_square(2, 3), 2, 1.3, method="boundary", chi=2, chi_e=16)
    theta = np.random.default_rng([23, 0]).uniform(-0.5, 0.5, ev.n_params)
    assert max_rel_error(gradient(theta, ev), finite_difference_gradient(theta, ev)) < 1e-3


def test_checkpointing_does_not_change_gradient():
    ev = Evaluator(build_square(2, 2), 2, 1.0, method="boundary", chi=4)
    theta = np.random.default_rng(3).uniform(-1, 1, ev.n_params)
    g1 = gradient(theta, ev)
    g2 = gradient(theta, ev.with_(checkpoint_layers=False))
    np.testing.assert_allclose(g1, g2, atol=1e-12)


def test_gradient_invariant_under_state_rescaling():
    lat = build_square(2, 2)
    spec = build_circuit(lat, 1)
    h = TfimHamiltonian(lat, 1.0)
    theta0 = np.random.default_rng(4).uniform(-1, 1, spec.n_params)

    def grad(scale):
        theta = torch.tensor(theta0, requires_grad=True)
        st = init_product_state(lat)
        st.tensors[0] = st.tensors[0] * scale
        out, _ = apply_circuit(st, spec, theta, 4)
        e = energy(out, h, "boundary", chi_e=16)
        return float(e.detach()), torch.autograd.grad(e, theta)[0].numpy()

    e1, g1 = grad(1.0)
    e2, g2 = grad(7.5)
    assert e1 == pytest.approx(e2, abs=1e-12)
    np.testing.assert_allclose(g1, g2, atol=1e-10)


def test_statevector_evaluator_gradient():
    ev = Evaluator(build_square(2, 2), 2, 2.0, method="statevector")
    theta = np.random.default_rng(5).uniform(-2, 2, ev.n_params)
    assert max_rel_error(gradient(theta, ev), finite_difference_gradient(theta, ev)) < 1e-6
    np.testing.assert_allclose(ev.energies(np.stack([theta, theta])), [ev(theta)] * 2, atol=1e-13)


def test_warm_start_chain_not_worse(tmp_path):
    lat = build_square(2, 3)
    ev2 = Evaluator(lat, 2, 2.6, method="statevector")
    th2, tr2 = minimize(initial_parameters("small-random", ev2.n_params, 0), ev2, max_iters=60)
    save_params(tmp_path / "d2.json", ev2.spec, th2)
    ev3 = ev2.with_(depth=3)
    theta0 = initial_parameters(f"warm:{tmp_path / 'd2.json'}", ev3.n_params, 0, ev3.spec)
    np.testing.assert_array_equal(theta0, warm_start_extend(th2, ev2.spec, ev3.spec))
    assert ev3(theta0) == pytest.approx(ev2(th2), abs=1e-12)
    th3, tr3 = minimize(theta0, ev3, max_iters=30)
    assert min(tr3.energies) <= min(tr2.energies) + 1e-9


def test_initial_parameter_policies():
    assert np.all(initial_parameters("zeros", 6, 0) == 0)
    small = initial_parameters("small-random", 600, 1)
    assert np.abs(small).max() <= 0.1
    wide = initial_parameters("uniform-random", 600, 1)
    assert np.abs(wide).max() <= np.pi and np.abs(wide).max() > 3.0
    np.testing.assert_array_equal(small, initial_parameters("small-random", 600, 1))
    with pytest.raises(ValueError):
        initial_parameters("gaussian", 6, 0)


def test_sweep_plumbing():
    lat = build_square(2, 2)
    seen = []
    rows = optimize_sweep(lat, [0.5, 2.0], [1, 2], chi=4, max_iters=10, on_cell=lambda *a: seen.append(a[0]))
    assert [(r["g"], r["depth"]) for r in rows] == [(0.5, 1), (0.5, 2), (2.0, 1), (2.0, 2)]
    assert all(r["status"] and not r["status"].startswith("failed") for r in rows)
    assert all(r["reference_kind"] == "lanczos" for r in rows)
    assert all(r["rel_error"] >= 0 for r in rows)
    assert len(seen) == 4


def test_sweep_records_failures():
    rows = optimize_sweep(build_square(2, 2), [1.0], [1], chi=4, method="nonsense", max_iters=2)
    assert rows[0]["status"].startswith("failed")


def test_sweep_empty_lists():
    with pytest.raises(ValueError):
        optimize_sweep(build_square(2, 2), [1.0], [], chi=4)
    with pytest.raises(ValueError):
        optimize_sweep(build_square(2, 2), [], [1], chi=4)


def test_repeat_runs_identical():
    ev = Evaluator(build_square(2, 2), 1, 1.0, method="boundary", chi=4)
    theta0 = initial_parameters("small-random", ev.n_params, 3)
    a = minimize(theta0, ev, max_iters=8)[1].energies
    b = minimize(theta0, ev, max_iters=8)[1].energies
    assert a == b


def test_evaluator_rejects_bad_input():
    with pytest.raises(ValueError):
        Evaluator(build_square(2, 2), 1, 1.0, method="ctm")
    ev = Evaluator(build_square(2, 2), 1, 1.0)
    with pytest.raises(ValueError):
        ev(np.zeros(3))
