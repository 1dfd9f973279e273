"""Gated recurrent unit dynamics with an analytic state Jacobian.

Each gate reads the concatenation ``[x, u]``::

    z  = sigmoid(Wz [x, u] + bz)
    r  = sigmoid(Wr [x, u] + br)
    h~ = tanh(Wh [r * x, u] + bh)
    x' = (1 - z) * x + z * h~
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..jacobian import Dynamics


def sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


@dataclass(frozen=True, eq=False)
class GruParameters:
    Wz: np.ndarray
    bz: np.ndarray
    Wr: np.ndarray
    br: np.ndarray
    Wh: np.ndarray
    bh: np.ndarray
    inputs: np.ndarray

    def __post_init__(self):
        D, U = self.dim, self.input_dim
        for name in ("Wz", "Wr", "Wh"):
            if getattr(self, name).shape != (D, D + U):
                raise ValueError(f"{name} must be {(D, D + U)}, got {getattr(self, name).shape}")
        for name in ("bz", "br", "bh"):
            if getattr(self, name).shape != (D,):
                raise ValueError(f"{name} must have shape {(D,)}")
        for name in ("Wz", "bz", "Wr", "br", "Wh", "bh", "inputs"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def dim(self):
        return self.bz.shape[0]

    @property
    def input_dim(self):
        return self.inputs.shape[1]

    @property
    def T(self):
        return self.inputs.shape[0]


def random_gru(rng: np.random.Generator, D: int, T: int, input_dim: int = None) -> GruParameters:
    """Uniform(+-1/sqrt(fan_in)) weights and biases, standard-normal inputs."""
    U = D if input_dim is None else input_dim
    bound = 1.0 / np.sqrt(D + U)

    def uni(*shape):
        return rng.uniform(-bound, bound, size=shape)

    return GruParameters(
        Wz=uni(D, D + U), bz=uni(D),
        Wr=uni(D, D + U), br=uni(D),
        Wh=uni(D, D + U), bh=uni(D),
        inputs=rng.standard_normal((T, U)),
    )


def zero_gru(D: int, T: int, input_dim: int = 1) -> GruParameters:
    z = np.zeros
    return GruParameters(z((D, D + input_dim)), z(D), z((D, D + input_dim)), z(D),
                         z((D, D + input_dim)), z(D), z((T, input_dim)))


class GruDynamics(Dynamics):
    has_jacobian = True
    has_jvp = True

    def __init__(self, params: GruParameters):
        self.p = params
        self.dim, self.length = params.dim, params.T
        D = self.dim
        self._Wzx, self._Wrx, self._Whx = params.Wz[:, :D], params.Wr[:, :D], params.Wh[:, :D]
        # input contributions are fixed per timestep
        self._cz = params.inputs @ params.Wz[:, D:].T + params.bz
        self._cr = params.inputs @ params.Wr[:, D:].T + params.br
        self._ch = params.inputs @ params.Wh[:, D:].T + params.bh

    def _gates(self, xs, rows):
        z = sigmoid(xs @ self._Wzx.T + self._cz[rows])
        r = sigmoid(xs @ self._Wrx.T + self._cr[rows])
        h = np.tanh((r * xs) @ self._Whx.T + self._ch[rows])
        return z, r, h

    def step(self, t, x):
        x = np.asarray(x, dtype=float)[None, :]
        z, r, h = self._gates(x, [t - 1])
        return ((1 - z) * x + z * h)[0]

    def step_all(self, xs):
        z, r, h = self._gates(xs, slice(None))
        return (1 - z) * xs + z * h

    def _jac(self, xs, rows):
        z, r, h = self._gates(xs, rows)
        dz = (z * (1 - z))[:, :, None] * self._Wzx               # (T, D, D)
        dr = (r * (1 - r))[:, :, None] * self._Wrx
        drx = np.einsum("ij,tj->tij", np.eye(self.dim), r) + xs[:, :, None] * dr
        dh = (1 - h * h)[:, :, None] * np.einsum("ik,tkj->tij", self._Whx, drx)
        J = (h - xs)[:, :, None] * dz + z[:, :, None] * dh
        idx = np.arange(self.dim)
        J[:, idx, idx] += 1 - z
        return J

    def jacobian(self, t, x):
        return self._jac(np.asarray(x, dtype=float)[None, :], [t - 1])[0]

    def jacobian_all(self, xs):
        return self._jac(xs, slice(None))


def gru_dynamics(params: GruParameters) -> GruDynamics:
    return GruDynamics(params)
