"""Dynamics interface and Jacobian approximations.

Timesteps are 1-based: ``step(t, x)`` is ``f_t`` mapping ``x_{t-1}`` to
``x_t``. The ``*_all`` methods evaluate every timestep at once from the
stacked previous states ``xs[t-1] = x_{t-1}``; subclasses override them with
vectorised versions where it matters.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .seeding import mix, splitmix64_array


class Dynamics:
    """Base class for a length-``T`` sequence of maps ``f_1 .. f_T`` on R^D."""

    dim: int
    length: int

    has_jacobian = False
    has_jvp = False

    def step(self, t: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, t: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no analytic Jacobian")

    def jvp(self, t: int, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.has_jacobian:
            return self.jacobian(t, x) @ v
        raise NotImplementedError(f"{type(self).__name__} has no Jacobian-vector product")

    def step_all(self, xs: np.ndarray) -> np.ndarray:
        return np.stack([self.step(t + 1, x) for t, x in enumerate(xs)])

    def jacobian_all(self, xs: np.ndarray) -> np.ndarray:
        return np.stack([self.jacobian(t + 1, x) for t, x in enumerate(xs)])

    def jvp_all(self, xs: np.ndarray, vs: np.ndarray) -> np.ndarray:
        if self.has_jacobian:
            return np.einsum("tij,tj->ti", self.jacobian_all(xs), vs)
        return np.stack([self.jvp(t + 1, x, v) for t, (x, v) in enumerate(zip(xs, vs))])

    def rollout(self, x0) -> np.ndarray:
        """Plain sequential evaluation, ``T x D``."""
        x = np.asarray(x0, dtype=float)
        out = np.empty((self.length, self.dim))
        for t in range(1, self.length + 1):
            x = self.step(t, x)
            out[t - 1] = x
        return out


class FunctionDynamics(Dynamics):
    """Dynamics assembled from plain callables ``f(t, x)``, ``jac(t, x)``, ``jvp(t, x, v)``."""

    def __init__(self, dim, length, step, jacobian=None, jvp=None):
        self.dim, self.length = int(dim), int(length)
        self._step, self._jac, self._jvp = step, jacobian, jvp
        self.has_jacobian = jacobian is not None
        self.has_jvp = jvp is not None or jacobian is not None

    def step(self, t, x):
        return np.asarray(self._step(t, x), dtype=float).reshape(self.dim)

    def jacobian(self, t, x):
        if self._jac is None:
            return super().jacobian(t, x)
        return np.asarray(self._jac(t, x), dtype=float).reshape(self.dim, self.dim)

    def jvp(self, t, x, v):
        if self._jvp is not None:
            return np.asarray(self._jvp(t, x, v), dtype=float).reshape(self.dim)
        return super().jvp(t, x, v)


# ---------------------------------------------------------------------------
# modes


@dataclass(frozen=True)
class Analytic:
    pass


@dataclass(frozen=True)
class CentralDifference:
    step: float = 1e-5

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("finite-difference step must be positive")


@dataclass(frozen=True)
class HutchinsonDiagonal:
    """Stochastic diagonal estimate ``mean_k z_k * (J z_k)`` with Rademacher ``z_k``."""

    probes: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.probes < 1:
            raise ValueError("Hutchinson estimator needs at least one probe")

    def reseeded(self, *parts) -> "HutchinsonDiagonal":
        return HutchinsonDiagonal(self.probes, mix(self.seed, *parts))


JacobianMode = Union[Analytic, CentralDifference, HutchinsonDiagonal]


def default_mode(f: Dynamics) -> JacobianMode:
    return Analytic() if f.has_jacobian else CentralDifference()


def _check_finite(a, what):
    if not np.all(np.isfinite(a)):
        raise FloatingPointError(f"non-finite {what}")
    return a


# ---------------------------------------------------------------------------
# single timestep


def full_jacobian(f: Dynamics, t: int, x, mode: JacobianMode = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    mode = default_mode(f) if mode is None else mode
    if isinstance(mode, Analytic):
        if not f.has_jacobian:
            raise ValueError("analytic Jacobian requested but dynamics provide none")
        J = f.jacobian(t, x)
    elif isinstance(mode, CentralDifference):
        h = mode.step
        cols = []
        for c in range(x.shape[0]):
            e = np.zeros_like(x)
            e[c] = h
            cols.append((f.step(t, x + e) - f.step(t, x - e)) / (2 * h))
        J = np.stack(cols, axis=1)
    else:
        raise ValueError(f"{type(mode).__name__} cannot produce a full Jacobian")
    return _check_finite(J, "Jacobian")


def rademacher(seed: int, t, probe: int, dim: int) -> np.ndarray:
    """Rademacher signs keyed by ``(seed, t, probe)``; ``t`` may be an array.

    Returns shape ``(dim,)`` for scalar ``t``, else ``(len(t), dim)``.
    """
    key = np.uint64(mix(seed, probe))
    t = np.asarray(t, dtype=np.uint64)
    counter = (t[..., None] << np.uint64(32)) | np.arange(dim, dtype=np.uint64)
    bits = splitmix64_array(counter ^ key) >> np.uint64(63)
    return 1.0 - 2.0 * bits.astype(float)


def _directional(f, t, x, v, h):
    return (f.step(t, x + h * v) - f.step(t, x - h * v)) / (2 * h)


def diagonal_jacobian(f: Dynamics, t: int, x, mode: JacobianMode = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    mode = default_mode(f) if mode is None else mode
    if not isinstance(mode, HutchinsonDiagonal):
        return np.diag(full_jacobian(f, t, x, mode)).copy()
    est = np.zeros_like(x)
    for k in range(mode.probes):
        z = rademacher(mode.seed, t, k, x.shape[0])
        Jz = f.jvp(t, x, z) if f.has_jvp else _directional(f, t, x, z, CentralDifference().step)
        est += z * Jz
    return _check_finite(est / mode.probes, "diagonal estimate")


# ---------------------------------------------------------------------------
# all timesteps at once


def jacobian_stack(f: Dynamics, xs, mode: JacobianMode = None) -> np.ndarray:
    """``(T, D, D)`` Jacobians of ``f_t`` at ``xs[t-1]``."""
    xs = np.asarray(xs, dtype=float)
    mode = default_mode(f) if mode is None else mode
    if isinstance(mode, Analytic):
        if not f.has_jacobian:
            raise ValueError("analytic Jacobian requested but dynamics provide none")
        J = f.jacobian_all(xs)
    elif isinstance(mode, CentralDifference):
        h, D = mode.step, xs.shape[1]
        cols = []
        for c in range(D):
            e = np.zeros(D)
            e[c] = h
            cols.append((f.step_all(xs + e) - f.step_all(xs - e)) / (2 * h))
        J = np.stack(cols, axis=2)
    else:
        raise ValueError(f"{type(mode).__name__} cannot produce a full Jacobian")
    return _check_finite(J, "Jacobian")


def diagonal_stack(f: Dynamics, xs, mode: JacobianMode = None) -> np.ndarray:
    """``(T, D)`` Jacobian diagonals, exact or Hutchinson-estimated."""
    xs = np.asarray(xs, dtype=float)
    mode = default_mode(f) if mode is None else mode
    if not isinstance(mode, HutchinsonDiagonal):
        return np.diagonal(jacobian_stack(f, xs, mode), axis1=1, axis2=2).copy()
    T, D = xs.shape
    ts = np.arange(1, T + 1)
    est = np.zeros_like(xs)
    for k in range(mode.probes):
        z = rademacher(mode.seed, ts, k, D)
        if f.has_jvp:
            Jz = f.jvp_all(xs, z)
        else:
            h = CentralDifference().step
            Jz = (f.step_all(xs + h * z) - f.step_all(xs - h * z)) / (2 * h)
        est += z * Jz
    return _check_finite(est / mode.probes, "diagonal estimate")
