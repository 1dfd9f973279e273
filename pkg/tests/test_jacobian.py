import numpy as np
import pytest

from parseq.jacobian import (
    Analytic,
    CentralDifference,
    FunctionDynamics,
    HutchinsonDiagonal,
    diagonal_jacobian,
    diagonal_stack,
    full_jacobian,
    jacobian_stack,
    rademacher,
)

M = np.array([[1.0, 2.0], [3.0, 4.0]])


def linear(jac=True):
    return FunctionDynamics(2, 3, lambda t, x: M @ x, (lambda t, x: M) if jac else None)


def test_identity_map():
    f = FunctionDynamics(3, 1, lambda t, x: x)
    assert np.allclose(full_jacobian(f, 1, np.ones(3)), np.eye(3), atol=1e-10)


def test_square_central_difference():
    f = FunctionDynamics(1, 1, lambda t, x: x**2)
    assert abs(full_jacobian(f, 1, [3.0], CentralDifference())[0, 0] - 6.0) < 1e-6


def test_linear_map():
    x = np.array([0.3, -1.2])
    assert np.array_equal(full_jacobian(linear(), 1, x, Analytic()), M)
    assert np.allclose(full_jacobian(linear(False), 1, x, CentralDifference()), M, rtol=0, atol=1e-9)


def test_analytic_needs_jacobian():
    with pytest.raises(ValueError):
        full_jacobian(linear(False), 1, np.zeros(2), Analytic())


def test_hutchinson_cannot_give_full_jacobian():
    with pytest.raises(ValueError):
        full_jacobian(linear(), 1, np.zeros(2), HutchinsonDiagonal())


def test_diagonal_of_linear_map():
    assert np.array_equal(diagonal_jacobian(linear(), 1, np.zeros(2), Analytic()), [1.0, 4.0])


def test_hutchinson_many_probes():
    est = diagonal_jacobian(linear(), 1, np.zeros(2), HutchinsonDiagonal(probes=10000, seed=7))
    assert np.max(np.abs(est - [1.0, 4.0])) < 0.1


@pytest.mark.parametrize("seed", range(5))
def test_one_probe_exact_for_elementwise(seed):
    d = np.array([0.5, -2.0, 3.0])
    f = FunctionDynamics(3, 2, lambda t, x: d * np.sin(x), lambda t, x: np.diag(d * np.cos(x)))
    x = np.array([0.1, 0.2, -0.4])
    est = diagonal_jacobian(f, 2, x, HutchinsonDiagonal(probes=1, seed=seed))
    assert np.allclose(est, d * np.cos(x), rtol=0, atol=1e-14)


def test_one_probe_exact_without_jvp():
    f = FunctionDynamics(3, 1, lambda t, x: x**3)
    x = np.array([1.0, -2.0, 0.5])
    est = diagonal_jacobian(f, 1, x, HutchinsonDiagonal(probes=1))
    assert np.allclose(est, 3 * x**2, atol=1e-6)


def test_hutchinson_deterministic():
    mode = HutchinsonDiagonal(probes=3, seed=11)
    a = diagonal_jacobian(linear(), 2, np.ones(2), mode)
    b = diagonal_jacobian(linear(), 2, np.ones(2), mode)
    assert np.array_equal(a, b)
    assert mode.reseeded(1).seed != mode.seed
    assert mode.reseeded(1) == mode.reseeded(1)


def test_more_probes_less_error():
    g = np.random.default_rng(0)
    A = g.standard_normal((6, 6))
    f = FunctionDynamics(6, 1, lambda t, x: A @ x, lambda t, x: A)
    err = {}
    for m in (4, 400):
        err[m] = np.mean([np.abs(diagonal_jacobian(f, 1, np.zeros(6), HutchinsonDiagonal(m, s)) - np.diag(A)).mean()
                          for s in range(20)])
    assert err[400] < err[4]


def test_rademacher_signs():
    z = rademacher(3, np.arange(1, 50), 0, 8)
    assert z.shape == (49, 8) and set(np.unique(z)) == {-1.0, 1.0}
    assert abs(z.mean()) < 0.15
    assert np.array_equal(rademacher(3, 5, 0, 8), z[4])


def test_stacks_match_single_steps():
    g = np.random.default_rng(2)
    W = g.standard_normal((4, 3, 3))
    f = FunctionDynamics(3, 4, lambda t, x: np.tanh(W[t - 1] @ x),
                         lambda t, x: (1 - np.tanh(W[t - 1] @ x) ** 2)[:, None] * W[t - 1])
    xs = g.standard_normal((4, 3))
    J = jacobian_stack(f, xs, Analytic())
    for t in range(4):
        assert np.allclose(J[t], full_jacobian(f, t + 1, xs[t]))
    assert np.allclose(jacobian_stack(f, xs, CentralDifference()), J, atol=1e-8)
    mode = HutchinsonDiagonal(probes=2, seed=5)
    D = diagonal_stack(f, xs, mode)
    for t in range(4):
        assert np.allclose(D[t], diagonal_jacobian(f, t + 1, xs[t], mode))


def test_non_finite_rejected():
    f = FunctionDynamics(1, 1, lambda t, x: x, lambda t, x: np.array([[np.nan]]))
    with pytest.raises(FloatingPointError):
        full_jacobian(f, 1, [0.0])
