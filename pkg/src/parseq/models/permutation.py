"""Group word problems embedded as permutation-matrix LDSs.

A permutation is stored as a gather index ``p`` acting on states by
``x' = x[p]``. Under this convention the running matrix product
``P_t ... P_1`` is the gather index ``p_1[p_2[...p_t]]``, i.e. the function
composition ``p_1 o p_2 o ... o p_t``, which is the running group product
``g_1 g_2 ... g_t``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..jacobian import Dynamics
from ..lds import AffineStack, StateTrajectory


def compose(p, q) -> np.ndarray:
    """Group product ``p q`` as functions (apply ``q`` first)."""
    return np.asarray(p)[np.asarray(q)]


def prefix_products(sequence) -> np.ndarray:
    seq = np.asarray(sequence)
    out = np.empty_like(seq)
    acc = np.arange(seq.shape[1])
    for t, p in enumerate(seq):
        acc = compose(acc, p)
        out[t] = acc
    return out


def is_permutation(p) -> bool:
    p = np.asarray(p)
    return p.ndim == 1 and np.array_equal(np.sort(p), np.arange(p.shape[0]))


@dataclass(frozen=True, eq=False)
class PermutationWordProblem:
    sequence: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        seq = np.asarray(self.sequence, dtype=np.int64)
        x0 = np.asarray(self.x0, dtype=float)
        if seq.ndim != 2 or seq.shape[0] < 1:
            raise ValueError("sequence must be a non-empty T x D array")
        for t, p in enumerate(seq):
            if not is_permutation(p):
                raise ValueError(f"element {t + 1} is not a permutation: {p.tolist()}")
        if x0.shape != (seq.shape[1],):
            raise ValueError("x0 must have one entry per permuted symbol")
        if np.unique(x0).size != x0.size:
            raise ValueError("x0 entries must be pairwise distinct")
        object.__setattr__(self, "sequence", seq)
        object.__setattr__(self, "x0", x0)

    @property
    def group_dim(self):
        return self.sequence.shape[1]

    @property
    def T(self):
        return self.sequence.shape[0]


def default_x0(D) -> np.ndarray:
    return np.arange(1, D + 1, dtype=float)


def random_word(rng: np.random.Generator, T: int, D: int = 5, exclude_identity=True) -> PermutationWordProblem:
    """Uniform draws from S_D, by default from its non-identity elements."""
    ident = np.arange(D)
    seq = np.empty((T, D), dtype=np.int64)
    for t in range(T):
        p = rng.permutation(D)
        while exclude_identity and D > 1 and np.array_equal(p, ident):
            p = rng.permutation(D)
        seq[t] = p
    return PermutationWordProblem(seq, default_x0(D))


class PermutationDynamics(Dynamics):
    has_jacobian = True
    has_jvp = True

    def __init__(self, problem: PermutationWordProblem):
        self.problem = problem
        self.perms = problem.sequence
        self.dim = problem.group_dim
        self.length = problem.T
        eye = np.eye(self.dim)
        self._mats = eye[self.perms]  # row i of P_t is e_{p_t[i]}

    def step(self, t, x):
        return np.asarray(x, dtype=float)[self.perms[t - 1]]

    def jacobian(self, t, x):
        return self._mats[t - 1].copy()

    def jvp(self, t, x, v):
        return np.asarray(v, dtype=float)[self.perms[t - 1]]

    def step_all(self, xs):
        return np.take_along_axis(xs, self.perms, axis=1)

    def jacobian_all(self, xs):
        return self._mats.copy()

    def jvp_all(self, xs, vs):
        return np.take_along_axis(vs, self.perms, axis=1)

    def transitions(self) -> AffineStack:
        """The exact LDS as permutation-tagged elements with zero offsets."""
        return AffineStack("permutation", self.perms.copy(), np.zeros((self.length, self.dim)))


def s5_dynamics(problem: PermutationWordProblem) -> PermutationDynamics:
    return PermutationDynamics(problem)


def decode_word(traj, x0=None, atol=1e-6) -> np.ndarray:
    """Read the running products back out of the tabular states.

    Row ``t`` is the gather index ``s`` with ``x_t = x0[s]``.
    """
    if isinstance(traj, StateTrajectory):
        x0 = traj.x0 if x0 is None else x0
        states = traj.states
    else:
        states = np.asarray(traj, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if np.unique(x0).size != x0.size:
        raise ValueError("x0 entries must be pairwise distinct")
    gap = np.abs(states[:, :, None] - x0[None, None, :])
    idx = np.argmin(gap, axis=2)
    worst = np.take_along_axis(gap, idx[:, :, None], axis=2).max(initial=0.0)
    if worst > atol:
        raise ValueError(f"state is not a permutation of x0 (off by {worst:.3g}); solver not converged?")
    for t, p in enumerate(idx):
        if not is_permutation(p):
            raise ValueError(f"state {t + 1} repeats a symbol of x0; solver not converged?")
    return idx
