import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parseq import lds
from parseq.lds import AffineElement, TransitionMatrix as TM
from parseq.verify import random_elements, random_matrix


def el(a, b):
    return AffineElement(TM.dense([[a]]), [b])


def test_neutral_element():
    m = AffineElement(TM.dense([[1.0, 2.0], [3.0, 4.0]]), [5.0, 6.0])
    out = lds.compose_affine(lds.identity_element(2), m)
    assert out.A is m.A and np.array_equal(out.b, m.b)


def test_hand_composition():
    out = lds.compose_affine(el(2, 1), el(3, 0.5))
    assert out.A.densify()[0, 0] == 6 and out.b[0] == 3.5


def test_zero_absorbs():
    g = np.random.default_rng(0)
    for kind in lds.KINDS:
        earlier = AffineElement(random_matrix(g, kind, 3), g.standard_normal(3))
        out = lds.compose_affine(earlier, AffineElement(TM.zero(3), [1.0, 2.0, 3.0]))
        assert out.A.kind == "zero" and np.array_equal(out.b, [1, 2, 3])


@pytest.mark.parametrize("M, expected", [
    (TM.identity(2), [3, 4]),
    (TM.diagonal([2, -1]), [6, -4]),
    (TM.permutation([1, 0]), [4, 3]),
])
def test_apply(M, expected):
    assert np.array_equal(M.apply([3.0, 4.0]), expected)


def test_densify():
    assert np.array_equal(TM.identity(2).densify(), np.eye(2))
    assert np.array_equal(TM.zero(2).densify(), np.zeros((2, 2)))
    assert np.array_equal(TM.permutation([1, 0]).densify(), [[0, 1], [1, 0]])


def test_rejects_non_bijection():
    with pytest.raises(ValueError):
        TM.permutation([0, 0, 2])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        TM.identity(2).apply(np.ones(3))
    with pytest.raises(ValueError):
        lds.compose_affine(lds.identity_element(2), lds.identity_element(3))


@pytest.mark.parametrize("kind", lds.KINDS)
def test_apply_matches_dense(kind):
    g = np.random.default_rng(1)
    M = random_matrix(g, kind, 4)
    x = g.standard_normal(4)
    assert np.allclose(M.apply(x), M.densify() @ x, rtol=0, atol=1e-14)


PROMOTION = {
    ("scaled", "scaled"): "scaled",
    ("scaled", "diagonal"): "diagonal",
    ("diagonal", "diagonal"): "diagonal",
    ("permutation", "permutation"): "permutation",
}


@pytest.mark.parametrize("k1", lds.KINDS)
@pytest.mark.parametrize("k2", lds.KINDS)
def test_promotion_lattice(k1, k2):
    g = np.random.default_rng(2)
    a, b = random_matrix(g, k1, 3), random_matrix(g, k2, 3)
    out = lds.compose_matrices(a, b)
    assert np.allclose(out.densify(), b.densify() @ a.densify(), rtol=0, atol=1e-14)
    if "zero" in (k1, k2):
        want = "zero"
    elif k1 == "identity":
        want = k2
    elif k2 == "identity":
        want = k1
    else:
        want = PROMOTION.get((k1, k2)) or PROMOTION.get((k2, k1)) or "dense"
    assert out.kind == want


def test_sequential_examples():
    traj = lds.evaluate_lds_sequential([1.0], [el(2, 0)] * 3)
    assert np.array_equal(traj.states[:, 0], [2, 4, 8])
    traj = lds.evaluate_lds_sequential([0.0], [el(1, 1)] * 2)
    assert np.array_equal(traj.states[:, 0], [1, 2])
    x0 = np.array([1.5, -2.0])
    traj = lds.evaluate_lds_sequential(x0, [lds.identity_element(2)] * 5)
    assert np.array_equal(traj.states, np.tile(x0, (5, 1)))


def test_parallel_examples():
    traj = lds.evaluate_lds_parallel([1.0], [el(2, 0)] * 3)
    assert np.array_equal(traj.states[:, 0], [2, 4, 8])
    e = AffineElement(TM.dense([[1.0, 2.0], [0.0, 3.0]]), [1.0, -1.0])
    traj = lds.evaluate_lds_parallel([1.0, 1.0], [e])
    assert np.array_equal(traj.states[0], [4.0, 2.0])


def test_parallel_diagonal_64():
    g = np.random.default_rng(4)
    elems = [AffineElement(TM.diagonal(g.uniform(-0.9, 0.9, 3)), g.standard_normal(3)) for _ in range(64)]
    x0 = g.standard_normal(3)
    par = lds.evaluate_lds_parallel(x0, elems).states
    seq = lds.evaluate_lds_sequential(x0, elems).states
    assert np.allclose(par, seq, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("kind", lds.KINDS + ("mixed",))
@pytest.mark.parametrize("n", [1, 2, 3, 17, 64, 129])
def test_parallel_matches_sequential(kind, n):
    g = np.random.default_rng(n)
    elems = random_elements(g, kind, n, 3)
    x0 = g.standard_normal(3)
    par = lds.evaluate_lds_parallel(x0, elems).states
    seq = lds.evaluate_lds_sequential(x0, elems).states
    assert np.allclose(par, seq, rtol=1e-10, atol=1e-12)


def test_stack_round_trip():
    g = np.random.default_rng(5)
    elems = random_elements(g, "diagonal", 6, 2)
    stack = lds.stack_elements(elems)
    assert stack.kind == "diagonal"
    for a, b in zip(stack.elements(), elems):
        assert np.array_equal(a.A.densify(), b.A.densify()) and np.array_equal(a.b, b.b)
    mixed = [lds.identity_element(2), AffineElement(TM.zero(2), [1.0, 1.0])]
    assert lds.stack_elements(mixed) is None


def test_threaded_object_scan():
    g = np.random.default_rng(6)
    elems = random_elements(g, "mixed", 40, 3)
    x0 = g.standard_normal(3)
    par = lds.evaluate_lds_parallel(x0, elems, workers=3).states
    assert np.allclose(par, lds.evaluate_lds_sequential(x0, elems).states, rtol=1e-10, atol=1e-12)


def test_overflow_is_reported():
    elems = [el(1e200, 0.0)] * 4
    with pytest.raises(FloatingPointError):
        lds.evaluate_lds_parallel([1.0], elems)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(lds.KINDS + ("mixed",)))
def test_affine_associativity(seed, kind):
    g = np.random.default_rng(seed)
    a, b, c = random_elements(g, kind, 3, 3)
    left = lds.compose_affine(lds.compose_affine(a, b), c)
    right = lds.compose_affine(a, lds.compose_affine(b, c))
    assert np.allclose(left.A.densify(), right.A.densify(), rtol=1e-12, atol=1e-14)
    assert np.allclose(left.b, right.b, rtol=1e-12, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(lds.KINDS), st.sampled_from(lds.KINDS))
def test_composition_is_closed(seed, k1, k2):
    g = np.random.default_rng(seed)
    out = lds.compose_matrices(random_matrix(g, k1, 3), random_matrix(g, k2, 3))
    assert out.kind in lds.KINDS and out.dim == 3
