import numpy as np
import pytest

from parseq import fixedpoint as fp
from parseq.jacobian import FunctionDynamics
from parseq.models import counter_chain, random_word, s5_dynamics
from parseq.verify import ALL_SCHEMES, bundled_dynamics


def plus_one(T):
    return FunctionDynamics(1, T, lambda t, x: x + 1, lambda t, x: np.eye(1))


def square(T=1):
    return FunctionDynamics(1, T, lambda t, x: x**2, lambda t, x: np.diag(2 * x))


def test_merit_of_rollout_is_zero():
    f, x0 = bundled_dynamics("gru", np.random.default_rng(0), 10, 3)
    _, L = fp.residual_and_merit(x0, f.rollout(x0), f)
    assert L < 1e-28


def test_merit_by_hand():
    r, L = fp.residual_and_merit([0.0], np.zeros((2, 1)), plus_one(2))
    assert np.array_equal(r[:, 0], [-1, -1]) and L == 1.0


def test_merit_is_quadratic():
    f = FunctionDynamics(2, 3, lambda t, x: np.zeros(2))
    traj = np.random.default_rng(1).standard_normal((3, 2))
    _, L1 = fp.residual_and_merit(np.zeros(2), traj, f)
    _, L2 = fp.residual_and_merit(np.zeros(2), 2 * traj, f)
    assert np.isclose(L2, 4 * L1)


def test_merit_shape_checked():
    with pytest.raises(ValueError):
        fp.residual_and_merit([0.0], np.zeros((3, 1)), plus_one(2))


def test_picard_and_jacobi_linearizations():
    f, x0 = bundled_dynamics("gru", np.random.default_rng(2), 5, 3)
    guess = np.random.default_rng(3).standard_normal((5, 3))
    prev = np.vstack([x0, guess[:-1]])
    for e in fp.linearize(fp.PICARD, f, guess, x0):
        assert e.A.kind == "identity"
    for t, e in enumerate(fp.linearize(fp.JACOBI, f, guess, x0)):
        assert e.A.kind == "zero"
        assert np.allclose(e.b, f.step(t + 1, prev[t]))


def test_newton_linearization_by_hand():
    (e,) = fp.linearize(fp.NEWTON, square(), np.array([[0.0]]), [3.0])
    assert e.A.densify()[0, 0] == 6.0 and e.b[0] == -9.0


def test_elk_linearizations():
    f, x0 = bundled_dynamics("gru", np.random.default_rng(4), 6, 3)
    guess = np.random.default_rng(5).standard_normal((6, 3))
    newton = fp.linearize_stack(fp.NEWTON, f, guess, x0)
    half = fp.linearize_stack(fp.scale_elk(0.5), f, guess, x0)
    assert np.allclose(half.a, 0.5 * newton.a)
    zero_k = fp.linearize_stack(fp.scale_elk(0.0), f, guess, x0)
    assert np.array_equal(zero_k.a, newton.a) and np.array_equal(zero_k.b, newton.b)
    qn = fp.linearize_stack(fp.QUASI_NEWTON, f, guess, x0)
    clip = fp.linearize_stack(fp.CLIP_ELK, f, guess, x0)
    assert np.all(np.abs(qn.a) <= 1)  # GRU diagonals stay in range, so clipping is a no-op
    assert np.array_equal(clip.a, qn.a)


def test_clip_elk_clips():
    f = FunctionDynamics(2, 1, lambda t, x: np.array([3 * x[0], -0.5 * x[1]]),
                         lambda t, x: np.diag([3.0, -0.5]))
    (e,) = fp.linearize(fp.CLIP_ELK, f, np.zeros((1, 2)), np.zeros(2))
    assert np.array_equal(e.A.diagonal_values(), [1.0, -0.5])


def test_newton_solves_linear_in_one():
    p = random_word(np.random.default_rng(0), 64)
    rep = fp.solve(s5_dynamics(p), p.x0, fp.SolverConfig(), fp.NEWTON)
    assert rep.converged and rep.iterations == 1


def test_exact_guess_takes_zero_iterations():
    f, x0 = bundled_dynamics("langevin", np.random.default_rng(0), 9, 2)
    cfg = fp.SolverConfig(initial_guess="provided", guess=f.rollout(x0))
    rep = fp.solve(f, x0, cfg, fp.PICARD)
    assert rep.converged and rep.iterations == 0 and rep.final_merit == 0.0


def test_jacobi_hand_iterates():
    cfg = fp.SolverConfig(initial_guess="zeros", tolerance=0.0)
    seen = []
    for i in (1, 2, 3):
        rep = fp.solve(plus_one(3), [0.0], fp.SolverConfig(initial_guess="zeros", max_iterations=i), fp.JACOBI)
        seen.append(rep.trajectory.states[:, 0].tolist())
    assert seen == [[1, 1, 1], [1, 2, 2], [1, 2, 3]]
    rep = fp.solve(plus_one(3), [0.0], cfg, fp.JACOBI)
    assert rep.converged and rep.iterations == 3


@pytest.mark.parametrize("scheme", ALL_SCHEMES, ids=lambda s: s.name)
def test_single_step_sequence(scheme):
    f, x0 = bundled_dynamics("gru", np.random.default_rng(1), 1, 4)
    rep = fp.solve(f, x0, fp.SolverConfig(), scheme)
    assert rep.converged and rep.iterations == 1


@pytest.mark.parametrize("scheme", ALL_SCHEMES, ids=lambda s: s.name)
@pytest.mark.parametrize("name", ["s5", "gru", "langevin", "custom-lds"])
def test_prefix_exactness(scheme, name):
    f, x0 = bundled_dynamics(name, np.random.default_rng(7), 10, 3)
    star = f.rollout(x0)
    for i in range(1, 6):
        rep = fp.solve(f, x0, fp.SolverConfig(tolerance=0.0, max_iterations=i), scheme)
        assert np.allclose(rep.trajectory.states[:i], star[:i], rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("scheme", ALL_SCHEMES, ids=lambda s: s.name)
def test_scan_and_sequential_evaluation_agree(scheme):
    f, x0 = bundled_dynamics("gru", np.random.default_rng(8), 20, 3)
    a = fp.solve(f, x0, fp.SolverConfig(evaluation="scan"), scheme)
    b = fp.solve(f, x0, fp.SolverConfig(evaluation="sequential"), scheme)
    assert a.iterations == b.iterations
    assert np.allclose(a.trajectory.states, b.trajectory.states, atol=1e-10)


def test_identity_dynamics_every_scheme_fast():
    f = FunctionDynamics(2, 6, lambda t, x: x, lambda t, x: np.eye(2))
    out = fp.compare_methods(f, np.array([1.0, -1.0]), ALL_SCHEMES)
    assert all(r.iterations <= 1 and r.converged for r in out.values())


def test_compare_methods_on_s5():
    p = random_word(np.random.default_rng(3), 32)
    out = fp.compare_methods(s5_dynamics(p), p.x0, [fp.NEWTON, fp.QUASI_NEWTON, fp.PICARD])
    assert out["newton"].iterations == 1
    assert out["newton"].iterations <= out["quasi-newton"].iterations
    assert out["newton"].iterations <= out["picard"].iterations


def test_gru_ordering():
    f, x0 = bundled_dynamics("gru", np.random.default_rng(9), 128, 16)
    out = fp.compare_methods(f, x0, [fp.NEWTON, fp.QUASI_NEWTON, fp.PICARD])
    its = [out[k].iterations for k in ("newton", "quasi-newton", "picard")]
    assert its == sorted(its)


def test_merit_history_and_timing():
    f = counter_chain(5)
    rep = fp.solve(f, [0.0], fp.SolverConfig(), fp.PICARD)
    assert len(rep.merit_history) == rep.iterations + 1
    assert len(rep.per_iteration_nanos) == rep.iterations
    assert rep.final_merit <= 5e-4


def test_divergence_reported():
    f = FunctionDynamics(1, 3, lambda t, x: np.exp(x), lambda t, x: np.diag(np.exp(x)))
    with np.errstate(over="ignore"), pytest.raises(fp.DivergenceError) as info:
        fp.solve(f, [5.0], fp.SolverConfig(), fp.PICARD)
    assert info.value.report.iterations < 3
    with np.errstate(over="ignore"):
        out = fp.compare_methods(f, np.array([5.0]), [fp.PICARD])
    assert not out["picard"].converged


def test_divergence_threshold():
    f, x0 = bundled_dynamics("s5", np.random.default_rng(0), 40, 5)
    with pytest.raises(fp.DivergenceError):
        fp.solve(f, x0, fp.SolverConfig(divergence_threshold=1e3), fp.PICARD)


def test_batch():
    g = np.random.default_rng(10)
    problems = [bundled_dynamics("gru", g, 8, 2) for _ in range(4)]
    reports, ok = fp.solve_batch(problems, fp.SolverConfig(), fp.NEWTON)
    assert ok and len(reports) == 4


@pytest.mark.parametrize("kwargs", [
    dict(tolerance=-1.0), dict(max_iterations=0), dict(initial_guess="provided"),
    dict(initial_guess="random"), dict(evaluation="gpu"),
])
def test_bad_config(kwargs):
    with pytest.raises(ValueError):
        fp.SolverConfig(**kwargs)


def test_bad_scheme():
    with pytest.raises(ValueError):
        fp.scheme_from_name("gauss-seidel")
    with pytest.raises(ValueError):
        fp.scale_elk(1.5)
    assert fp.scheme_from_name("Quasi-Newton") == fp.QUASI_NEWTON


def test_sequential_report():
    f, x0 = bundled_dynamics("langevin", np.random.default_rng(0), 12, 2)
    rep = fp.sequential_report(f, x0)
    assert rep.iterations == 12 and rep.final_merit == 0.0
