"""Parallel fixed-point evaluation of nonlinear recursions.

Every scheme here refines a whole-trajectory guess by solving the LDS

    x_t' = f_t(x_{t-1}) + A_t (x_{t-1}' - x_{t-1})

where ``x`` is the current guess and ``A_t`` is some approximation of the
Jacobian of ``f_t`` at ``x_{t-1}``: the Jacobian itself (Newton), its
diagonal (quasi-Newton), the identity (Picard) or zero (Jacobi), plus the
damped ELK variants.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .jacobian import (
    Dynamics,
    HutchinsonDiagonal,
    JacobianMode,
    default_mode,
    diagonal_stack,
    jacobian_stack,
)
from .lds import (
    AffineStack,
    NumericalOverflowError,
    StateTrajectory,
    apply_stack,
    evaluate_stack_parallel,
    evaluate_stack_sequential,
)

SCHEME_KINDS = ("newton", "quasi_newton", "picard", "jacobi", "scale_elk", "clip_elk")


@dataclass(frozen=True)
class Scheme:
    kind: str
    k: float = 0.0
    base: str = "newton"

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme {self.kind!r}")
        if self.kind == "scale_elk":
            if not 0.0 <= self.k <= 1.0:
                raise ValueError("scale-ELK needs 0 <= k <= 1")
            if self.base not in ("newton", "quasi_newton"):
                raise ValueError("scale-ELK base must be newton or quasi_newton")

    @property
    def name(self) -> str:
        return self.kind.replace("_", "-")

    @property
    def needs_jacobian(self) -> bool:
        return self.kind == "newton" or (self.kind == "scale_elk" and self.base == "newton")

    @property
    def needs_diagonal(self) -> bool:
        return self.kind in ("quasi_newton", "clip_elk") or (
            self.kind == "scale_elk" and self.base == "quasi_newton")


NEWTON = Scheme("newton")
QUASI_NEWTON = Scheme("quasi_newton")
PICARD = Scheme("picard")
JACOBI = Scheme("jacobi")
CLIP_ELK = Scheme("clip_elk")


def scale_elk(k, base="newton") -> Scheme:
    return Scheme("scale_elk", k=k, base=base)


def scheme_from_name(name: str, k: float = 0.5, base: str = "newton") -> Scheme:
    kind = name.strip().lower().replace("-", "_")
    if kind == "scale_elk":
        return scale_elk(k, base.replace("-", "_"))
    return Scheme(kind)


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 5e-4
    max_iterations: Optional[int] = None       # None means T
    initial_guess: str = "replicate"           # replicate | zeros | provided
    guess: Optional[np.ndarray] = None
    jacobian_mode: Optional[JacobianMode] = None
    diagonal_mode: Optional[JacobianMode] = None
    evaluation: str = "scan"                   # scan | sequential
    divergence_threshold: float = math.inf

    def __post_init__(self):
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be nonnegative")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.initial_guess not in ("replicate", "zeros", "provided"):
            raise ValueError(f"unknown initial guess policy {self.initial_guess!r}")
        if self.initial_guess == "provided" and self.guess is None:
            raise ValueError("initial_guess='provided' requires a guess")
        if self.evaluation not in ("scan", "sequential"):
            raise ValueError(f"unknown evaluation {self.evaluation!r}")


@dataclass
class SolveReport:
    trajectory: StateTrajectory
    iterations: int
    merit_history: list
    converged: bool
    per_iteration_nanos: list = field(default_factory=list)
    scheme: Optional[Scheme] = None

    @property
    def final_merit(self) -> float:
        return self.merit_history[-1]


class DivergenceError(RuntimeError):
    def __init__(self, message, report: SolveReport):
        super().__init__(message)
        self.report = report


def _states(traj):
    return traj.states if isinstance(traj, StateTrajectory) else np.asarray(traj, dtype=float)


def _previous(x0, states):
    return np.vstack([np.asarray(x0, dtype=float)[None, :], states[:-1]])


def residual_and_merit(x0, traj, f: Dynamics):
    """Stepwise residual ``r_t = x_t - f_t(x_{t-1})`` and ``0.5 * ||r||^2``."""
    states = _states(traj)
    if states.shape != (f.length, f.dim):
        raise ValueError(f"trajectory shape {states.shape} does not match dynamics {(f.length, f.dim)}")
    if not np.all(np.isfinite(states)):
        raise ValueError("non-finite trajectory")
    r = states - f.step_all(_previous(x0, states))
    return r, 0.5 * float(np.sum(r * r))


def linearize_stack(scheme: Scheme, f: Dynamics, traj_guess, x0,
                    jacobian_mode: JacobianMode = None, diagonal_mode: JacobianMode = None) -> AffineStack:
    states = _states(traj_guess)
    prev = _previous(x0, states)
    fx = f.step_all(prev)
    T = states.shape[0]
    if scheme.kind == "picard":
        kind, a = "identity", np.zeros((T, 0))
    elif scheme.kind == "jacobi":
        kind, a = "zero", np.zeros((T, 0))
    elif scheme.needs_jacobian:
        kind, a = "dense", jacobian_stack(f, prev, jacobian_mode or default_mode(f))
    else:
        kind, a = "diagonal", diagonal_stack(f, prev, diagonal_mode or default_mode(f))
    if scheme.kind == "scale_elk":
        a = (1.0 - scheme.k) * a
    elif scheme.kind == "clip_elk":
        a = np.clip(a, -1.0, 1.0)
    return AffineStack(kind, a, fx - apply_stack(kind, a, prev))


def linearize(scheme: Scheme, f: Dynamics, traj_guess, x0, mode: JacobianMode = None) -> list:
    """Per-timestep affine elements ``(A_t, f_t(x_{t-1}) - A_t x_{t-1})``."""
    return linearize_stack(scheme, f, traj_guess, x0, mode, mode).elements()


def initial_guess(f: Dynamics, x0, config: SolverConfig) -> np.ndarray:
    if config.initial_guess == "replicate":
        return np.tile(np.asarray(x0, dtype=float), (f.length, 1))
    if config.initial_guess == "zeros":
        return np.zeros((f.length, f.dim))
    guess = np.array(_states(config.guess), dtype=float)
    if guess.shape != (f.length, f.dim):
        raise ValueError(f"provided guess has shape {guess.shape}, expected {(f.length, f.dim)}")
    return guess


def solve(f: Dynamics, x0, config: SolverConfig = SolverConfig(), scheme: Scheme = NEWTON) -> SolveReport:
    """Iterate the scheme's LDS until the merit drops to the tolerance.

    The merit of the initial guess is checked first, so an exact guess
    reports zero iterations. At most ``max_iterations`` (default ``T``) LDS
    evaluations follow.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (f.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, dynamics dimension is {f.dim}")
    if f.length < 1:
        raise ValueError("need at least one timestep")
    max_it = f.length if config.max_iterations is None else config.max_iterations
    evaluate = evaluate_stack_parallel if config.evaluation == "scan" else evaluate_stack_sequential
    states = initial_guess(f, x0, config)
    _, merit = residual_and_merit(x0, states, f)
    report = SolveReport(StateTrajectory(x0, states), 0, [merit], merit <= config.tolerance, [], scheme)

    while not report.converged and report.iterations < max_it:
        i = report.iterations
        start = time.perf_counter_ns()
        diag_mode = config.diagonal_mode
        if isinstance(diag_mode, HutchinsonDiagonal):
            diag_mode = diag_mode.reseeded(i)
        try:
            stack = linearize_stack(scheme, f, states, x0, config.jacobian_mode, diag_mode)
            states = evaluate(x0, stack)
        except NumericalOverflowError as exc:
            raise DivergenceError(f"diverged at iteration {i + 1}: {exc}", report) from exc
        if not np.all(np.isfinite(states)):
            raise DivergenceError(f"diverged at iteration {i + 1}: non-finite states", report)
        _, merit = residual_and_merit(x0, states, f)
        report.per_iteration_nanos.append(time.perf_counter_ns() - start)
        report.trajectory = StateTrajectory(x0, states)
        report.iterations = i + 1
        report.merit_history.append(merit)
        report.converged = merit <= config.tolerance
        if not math.isfinite(merit) or merit > config.divergence_threshold:
            raise DivergenceError(f"diverged at iteration {i + 1}: merit {merit:.3g}", report)
    return report


def solve_batch(problems: Sequence[tuple], config: SolverConfig = SolverConfig(), scheme: Scheme = NEWTON):
    """Independent solves over ``(dynamics, x0)`` pairs.

    Returns the reports and whether every member converged.
    """
    reports = [solve(f, x0, config, scheme) for f, x0 in problems]
    return reports, all(r.converged for r in reports)


def compare_methods(f: Dynamics, x0, schemes: Sequence[Scheme], config: SolverConfig = SolverConfig()) -> dict:
    """Solve the same problem with each scheme; diverged runs keep their partial report."""
    out = {}
    for scheme in schemes:
        try:
            out[scheme.name] = solve(f, x0, config, scheme)
        except DivergenceError as exc:
            exc.report.converged = False
            out[scheme.name] = exc.report
    return out


def sequential_report(f: Dynamics, x0) -> SolveReport:
    """The plain rollout, recorded as ``T`` iterations by convention."""
    start = time.perf_counter_ns()
    states = f.rollout(x0)
    elapsed = time.perf_counter_ns() - start
    _, merit = residual_and_merit(x0, states, f)
    return SolveReport(StateTrajectory(x0, states), f.length, [merit], True, [elapsed], None)
