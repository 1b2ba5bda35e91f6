import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pepsvqe.tensor import KernelError, contract, einsum2, permute, reshape, svd, svd_truncate


def t(x):
    return torch.as_tensor(np.asarray(x, dtype=float))


def naive_matmul(a, b):
    n, k = a.shape
    _, m = b.shape
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            for p in range(k):
                out[i, j] += a[i, p] * b[p, j]
    return out


def test_identity_contraction():
    v = t([0.3, -1.2])
    assert torch.equal(contract(torch.eye(2, dtype=torch.float64), v, [1], [0]), v)


def test_unit_vector_full_contraction():
    v = t([3.0, 4.0]) / 5
    assert contract(v, v, [0], [0]).item() == pytest.approx(1.0, abs=1e-15)


def test_matmul_against_loops(rng):
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 5))
    np.testing.assert_allclose(contract(t(a), t(b), [1], [0]).numpy(), naive_matmul(a, b), rtol=1e-13, atol=1e-14)


def test_contract_free_axis_order(rng):
    a, b = rng.normal(size=(2, 3, 4)), rng.normal(size=(4, 5, 3))
    got = contract(t(a), t(b), [1, 2], [2, 0]).numpy()
    np.testing.assert_allclose(got, np.einsum("ijk,kmj->im", a, b), rtol=1e-12)


def test_contract_shape_mismatch():
    with pytest.raises(ValueError):
        contract(torch.zeros(2, 3, dtype=torch.float64), torch.zeros(4, dtype=torch.float64), [1], [0])


@given(st.floats(-10, 10))
def test_contract_bilinear(alpha):
    g = np.random.default_rng(7)
    a, b = t(g.normal(size=(3, 4))), t(g.normal(size=(4, 2)))
    lhs = contract(alpha * a, b, [1], [0])
    rhs = alpha * contract(a, b, [1], [0])
    assert torch.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_einsum2_matches_numpy(rng):
    a, b = rng.normal(size=(2, 3, 4)), rng.normal(size=(3, 5, 2))
    got = einsum2("abc,bda->dc", t(a), t(b)).numpy()
    np.testing.assert_allclose(got, np.einsum("abc,bda->dc", a, b), rtol=1e-12)
    with pytest.raises(ValueError):
        einsum2("ab,bc->abc", t(a[0]), t(b[0]))


def test_permute_identity_is_bitwise(rng):
    x = t(rng.normal(size=(2, 3, 4)))
    assert torch.equal(permute(x, [0, 1, 2]), x)
    m = t(rng.normal(size=(3, 5)))
    assert torch.equal(permute(permute(m, [1, 0]), [1, 0]), m)
    with pytest.raises(ValueError):
        permute(x, [0, 0, 1])


def test_reshape_roundtrip(rng):
    x = t(rng.normal(size=(2, 6)))
    assert torch.equal(reshape(reshape(x, (3, 4)), (2, 6)), x)
    with pytest.raises(ValueError):
        reshape(x, (5, 2))


def test_rank_one_exact():
    m = torch.outer(t([1.0, 2.0, 3.0]), t([0.5, -1.0]))
    res = svd_truncate(m, 1, chi=1)
    assert res.discarded_weight == 0.0
    assert torch.allclose(res.left * res.weights @ res.right, m, atol=1e-14)


def test_identity_half_discarded():
    res = svd_truncate(torch.eye(4, dtype=torch.float64), 1, chi=2)
    assert res.discarded_weight == pytest.approx(0.5, abs=1e-15)


def test_full_rank_reconstruction(rng):
    m = t(rng.normal(size=(8, 8)))
    res = svd_truncate(m, 1, chi=8)
    assert float((res.left * res.weights @ res.right - m).norm()) < 1e-12 * float(m.norm())


@given(arrays(np.float64, (6, 5), elements=st.floats(-1, 1)), st.integers(1, 5))
def test_discarded_weight_matches_oracle(a, chi):
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] < 1e-6:
        return
    res = svd_truncate(t(a), 1, chi=chi, cutoff=0.0)
    k = res.weights.shape[0]
    assert np.sum(s[:k] ** 2) / np.sum(s**2) == pytest.approx(1 - res.discarded_weight, abs=1e-12)
    assert res.discarded_weight == pytest.approx(np.sum(s[k:] ** 2) / np.sum(s**2), abs=1e-12)
    w = res.weights.numpy()
    assert np.all(np.diff(w) <= 1e-15) and 0 <= res.discarded_weight <= 1
    # best rank-k approximation error equals the tail of the spectrum
    err = np.linalg.norm((res.left * res.weights @ res.right).numpy() - a) ** 2
    assert err == pytest.approx(np.sum(s[k:] ** 2), abs=1e-10)


def test_cutoff_drops_small_values():
    m = torch.diag(t([1.0, 1e-13, 1e-3]))
    res = svd_truncate(m, 1, chi=3)
    assert res.weights.shape[0] == 2


def test_split_by_axis_list(rng):
    x = t(rng.normal(size=(2, 3, 4)))
    res = svd_truncate(x, [0, 2], chi=12)
    assert res.left.shape[:2] == (2, 4) and res.right.shape[1:] == (3,)
    back = torch.einsum("ack,k,kb->abc", res.left, res.weights, res.right)
    assert torch.allclose(back, x, atol=1e-12)


def test_zero_tensor_raises():
    with pytest.raises(KernelError):
        svd_truncate(torch.zeros(3, 3, dtype=torch.float64), 1, chi=2)


def test_svd_gradcheck(rng):
    a = t(rng.normal(size=(5, 3))).requires_grad_()

    def f(x):
        u, s, vh = svd(x)
        # gauge-invariant functions of the factors
        return s, (u * s) @ vh, (u[:, :2] @ u[:, :2].mT)

    assert torch.autograd.gradcheck(f, (a,), eps=1e-6, atol=1e-7)


@pytest.mark.parametrize("scale", [1.0, 1e-4, 1e-7])
def test_svd_adjoint_is_scale_covariant(rng, scale):
    # the broadening must not erase gauge terms for small-norm inputs
    a0 = rng.normal(size=(6, 4)) * scale
    w = t(rng.normal(size=(6, 4)))

    def loss(svd_fn, x):
        u, s, vh = svd_fn(x)
        # sign-invariant rank-2 projector, so only the gauge terms carry the gradient
        return ((u[:, :2] @ vh[:2]) * w).sum()

    grads = []
    for fn in (svd, lambda x: torch.linalg.svd(x, full_matrices=False)):
        a = t(a0).requires_grad_()
        (g,) = torch.autograd.grad(loss(fn, a), a)
        grads.append(g.numpy())
    np.testing.assert_allclose(grads[0], grads[1], rtol=1e-8, atol=1e-10 / scale)


def test_truncated_svd_gradient_matches_finite_difference(rng):
    a0 = rng.normal(size=(6, 6))

    def loss(x):
        res = svd_truncate(x, 1, chi=3)
        m = res.left * res.weights @ res.right
        return (m * torch.as_tensor(np.arange(36.0).reshape(6, 6))).sum()

    a = t(a0).requires_grad_()
    (g,) = torch.autograd.grad(loss(a), a)
    fd = np.zeros_like(a0)
    for i in range(6):
        for j in range(6):
            e = np.zeros_like(a0)
            e[i, j] = 1e-6
            fd[i, j] = (loss(t(a0 + e)).item() - loss(t(a0 - e)).item()) / 2e-6
    np.testing.assert_allclose(g.numpy(), fd, rtol=1e-5, atol=1e-6)
