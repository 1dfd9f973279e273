"""Time-varying affine dynamics ``f_t(x) = A_t x + c_t``."""
import numpy as np

from ..jacobian import Dynamics


class LinearDynamics(Dynamics):
    has_jacobian = True
    has_jvp = True

    def __init__(self, mats, offsets):
        self.mats = np.asarray(mats, dtype=float)
        self.offsets = np.asarray(offsets, dtype=float)
        self.length, self.dim = self.offsets.shape
        if self.mats.shape != (self.length, self.dim, self.dim):
            raise ValueError("mats must be T x D x D matching offsets")

    def step(self, t, x):
        return self.mats[t - 1] @ np.asarray(x, dtype=float) + self.offsets[t - 1]

    def step_all(self, xs):
        return np.einsum("tij,tj->ti", self.mats, xs) + self.offsets

    def jacobian(self, t, x):
        return self.mats[t - 1].copy()

    def jacobian_all(self, xs):
        return self.mats.copy()


def counter_chain(T, D=1, increment=1.0) -> LinearDynamics:
    """``x_t = x_{t-1} + increment``."""
    return LinearDynamics(np.broadcast_to(np.eye(D), (T, D, D)), np.full((T, D), increment))


def random_orthogonal_lds(rng: np.random.Generator, D: int, T: int) -> LinearDynamics:
    """Random rotations/reflections with standard-normal offsets.

    Orthogonal transitions neither damp nor amplify errors, so no scheme
    gets a lucky early exit from contraction.
    """
    q, r = np.linalg.qr(rng.standard_normal((T, D, D)))
    q = q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
    return LinearDynamics(q, rng.standard_normal((T, D)))
