"""Desk-scale check of the parallel-chord view of the fixed-point schemes.

The residual ``F(x) = [x_1 - f_1(x_0), ..., x_T - f_T(x_{T-1})]`` has a unit
lower block-bidiagonal Jacobian with ``-df_t/dx`` below the diagonal. Each
scheme corresponds to a chord operator of the same shape with ``-A_t`` in
place of the Jacobian blocks, and one chord step ``x - T^{-1} F(x)`` is one
LDS iteration. ``I - T^{-1} dF/dx`` is strictly block lower triangular,
hence nilpotent.

States are flattened timestep-major: ``(x_1, ..., x_T)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fixedpoint import Scheme, _previous, _states, linearize_stack
from .jacobian import Dynamics, JacobianMode, default_mode, jacobian_stack
from .lds import apply_stack

MAX_SIZE = 4096


@dataclass(frozen=True, eq=False)
class BlockSystem:
    T_len: int
    D: int
    residual_jacobian: np.ndarray
    scheme_operator: np.ndarray
    sub_blocks: np.ndarray  # A_2 .. A_T as dense (T-1, D, D)

    def block(self, mat, r, c):
        D = self.D
        return mat[r * D:(r + 1) * D, c * D:(c + 1) * D]


def _bidiagonal(blocks, T, D):
    M = np.eye(T * D)
    for t in range(1, T):
        M[t * D:(t + 1) * D, (t - 1) * D:t * D] = -blocks[t - 1]
    return M


def build_block_system(f: Dynamics, traj, x0, scheme: Scheme,
                       jacobian_mode: JacobianMode = None, diagonal_mode: JacobianMode = None) -> BlockSystem:
    states = _states(traj)
    T, D = states.shape
    if T * D > MAX_SIZE:
        raise ValueError(f"block system of size {T * D} exceeds the desk-scale limit {MAX_SIZE}")
    prev = _previous(x0, states)
    J = jacobian_stack(f, prev, jacobian_mode or default_mode(f))
    stack = linearize_stack(scheme, f, states, x0, jacobian_mode, diagonal_mode)
    eye = np.broadcast_to(np.eye(D), (T, D, D))
    A = np.stack([apply_stack(stack.kind, stack.a, eye[:, :, j]) for j in range(D)], axis=2)
    return BlockSystem(T, D, _bidiagonal(J[1:], T, D), _bidiagonal(A[1:], T, D), A[1:])


def _forward_substitute(sys: BlockSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve ``T y = rhs`` block by block; ``rhs`` is ``TD`` or ``TD x k``."""
    D = sys.D
    y = np.array(rhs, dtype=float, copy=True)
    for t in range(1, sys.T_len):
        y[t * D:(t + 1) * D] += sys.sub_blocks[t - 1] @ y[(t - 1) * D:t * D]
    return y


def parallel_chord_step(sys: BlockSystem, x_flat, F_val) -> np.ndarray:
    x_flat = np.asarray(x_flat, dtype=float)
    return x_flat - _forward_substitute(sys, np.asarray(F_val, dtype=float))


def chord_error_operator(sys: BlockSystem) -> np.ndarray:
    """``M = I - T^{-1} dF/dx``."""
    return np.eye(sys.T_len * sys.D) - _forward_substitute(sys, sys.residual_jacobian)


def nilpotency_defect(sys: BlockSystem) -> float:
    """Frobenius norm of ``M^T_len``; zero when ``M`` is nilpotent of that index."""
    M = chord_error_operator(sys)
    return float(np.linalg.norm(np.linalg.matrix_power(M, sys.T_len)))


def sigma_factor(sys: BlockSystem) -> float:
    """Spectral radius of ``M``.

    Eigenvalues of a nilpotent matrix are ill-conditioned, so expect noise
    well above machine precision here; :func:`nilpotency_defect` is the
    reliable structural check.
    """
    M = chord_error_operator(sys)
    return float(np.max(np.abs(np.linalg.eigvals(M)))) if M.size else 0.0
