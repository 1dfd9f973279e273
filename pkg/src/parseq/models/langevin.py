"""Unadjusted Langevin dynamics on a Gaussian-mixture potential.

``f_t(x) = x - eps * grad phi(x) + sqrt(2 eps) w_t`` with
``phi = -log sum_k pi_k N(x; mu_k, Sigma_k)`` and the noise ``w_t`` drawn up
front, so every ``f_t`` is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..jacobian import Dynamics


@dataclass(frozen=True, eq=False)
class GaussianMixturePotential:
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covs, dtype=float)
        K, D = means.shape
        if w.shape != (K,) or covs.shape != (K, D, D):
            raise ValueError("weights, means and covariances disagree on K or D")
        if np.any(w <= 0) or not np.isclose(w.sum(), 1.0):
            raise ValueError("mixture weights must be positive and sum to one")
        if not np.allclose(covs, np.swapaxes(covs, 1, 2)):
            raise ValueError("covariances must be symmetric")
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not positive definite") from exc
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "precisions", np.linalg.inv(covs))
        logdet = 2 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
        object.__setattr__(self, "_log_norm", np.log(w) - 0.5 * logdet - 0.5 * D * np.log(2 * np.pi))

    @property
    def K(self):
        return self.means.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def _parts(self, xs):
        diff = xs[:, None, :] - self.means[None]                          # (N, K, D)
        g = np.einsum("kij,nkj->nki", self.precisions, diff)               # P_k (x - mu_k)
        logp = self._log_norm[None] - 0.5 * np.sum(diff * g, axis=2)       # (N, K)
        return g, logp

    def neg_log_density(self, x):
        xs = np.atleast_2d(x)
        _, logp = self._parts(xs)
        out = -logsumexp(logp, axis=1)
        return out if np.ndim(x) == 2 else out[0]

    def grad(self, xs):
        """Gradient of the potential for a stack of points ``(N, D)``."""
        g, logp = self._parts(xs)
        resp = np.exp(logp - logsumexp(logp, axis=1, keepdims=True))
        return np.einsum("nk,nki->ni", resp, g)

    def hessian(self, xs):
        """``sum_k r_k P_k - sum_k r_k g_k g_k^T + gbar gbar^T`` per point."""
        g, logp = self._parts(xs)
        resp = np.exp(logp - logsumexp(logp, axis=1, keepdims=True))
        gbar = np.einsum("nk,nki->ni", resp, g)
        H = np.einsum("nk,kij->nij", resp, self.precisions)
        H -= np.einsum("nk,nki,nkj->nij", resp, g, g)
        H += gbar[:, :, None] * gbar[:, None, :]
        return H


def mixture_grad(potential: GaussianMixturePotential, x) -> np.ndarray:
    return potential.grad(np.asarray(x, dtype=float)[None, :])[0]


def mixture_hessian(potential: GaussianMixturePotential, x) -> np.ndarray:
    return potential.hessian(np.asarray(x, dtype=float)[None, :])[0]


def wishart_like(rng: np.random.Generator, D: int) -> np.ndarray:
    L = rng.standard_normal((D, D))
    return L.T @ L + 1e-3 * D * np.eye(D)


def random_mixture(rng: np.random.Generator, D: int, K: int = 2, spread: float = 2.0) -> GaussianMixturePotential:
    """Equal-weight mixture with N(0, spread^2) means and Wishart-like covariances."""
    means = spread * rng.standard_normal((K, D))
    covs = np.stack([wishart_like(rng, D) for _ in range(K)])
    return GaussianMixturePotential(np.full(K, 1.0 / K), means, covs)


@dataclass(frozen=True, eq=False)
class LangevinSpec:
    potential: GaussianMixturePotential
    noise: np.ndarray
    x0: np.ndarray
    step: float = 1e-5

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("Langevin step size must be positive")
        noise = np.asarray(self.noise, dtype=float)
        if noise.ndim != 2 or noise.shape[1] != self.potential.dim:
            raise ValueError("noise must be T x D")
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))


def random_langevin(rng: np.random.Generator, D: int, T: int, K: int = 2, step: float = 1e-5) -> LangevinSpec:
    potential = random_mixture(rng, D, K)
    return LangevinSpec(potential, rng.standard_normal((T, D)), rng.standard_normal(D), step)


class LangevinDynamics(Dynamics):
    has_jacobian = True
    has_jvp = True

    def __init__(self, spec: LangevinSpec):
        self.spec = spec
        self.potential = spec.potential
        self.eps = spec.step
        self.dim, self.length = spec.potential.dim, spec.noise.shape[0]
        self._kick = np.sqrt(2 * self.eps) * spec.noise

    def step(self, t, x):
        x = np.asarray(x, dtype=float)
        return x - self.eps * mixture_grad(self.potential, x) + self._kick[t - 1]

    def step_all(self, xs):
        return xs - self.eps * self.potential.grad(xs) + self._kick

    def jacobian(self, t, x):
        return np.eye(self.dim) - self.eps * mixture_hessian(self.potential, x)

    def jacobian_all(self, xs):
        return np.eye(self.dim)[None] - self.eps * self.potential.hessian(xs)


def langevin_dynamics(spec: LangevinSpec) -> LangevinDynamics:
    return LangevinDynamics(spec)
