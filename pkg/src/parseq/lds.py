"""Structured transition matrices and time-varying affine recursions.

An LDS step is ``x_t = A_t x_{t-1} + b_t``. Steps compose as affine maps,
``(A_e, b_e)`` then ``(A_l, b_l)`` giving ``(A_l A_e, A_l b_e + b_l)``, which
is the operator scanned by :func:`evaluate_lds_parallel`.

Transition matrices carry a structural tag so that products of diagonal,
scaled-identity or permutation matrices stay compact. Mixed tags promote
along ``identity < {scaled, diagonal, permutation} < dense``; ``zero``
absorbs. A sequence whose elements all share one tag is evaluated through a
vectorised stacked scan; mixed sequences fall back to the object scan.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import pscan

KINDS = ("identity", "zero", "scaled", "diagonal", "permutation", "dense")


class NumericalOverflowError(FloatingPointError):
    pass


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """A D x D matrix stored by structure.

    ``data`` is ``None`` for identity/zero, a float for scaled identity, a
    D-vector for diagonal, a D x D array for dense, and a gather index for
    permutation, meaning ``(P x)[i] = x[data[i]]``.
    """

    kind: str
    dim: int
    data: object = None

    @classmethod
    def identity(cls, dim):
        return cls("identity", int(dim))

    @classmethod
    def zero(cls, dim):
        return cls("zero", int(dim))

    @classmethod
    def scaled(cls, a, dim):
        return cls("scaled", int(dim), float(a))

    @classmethod
    def diagonal(cls, d):
        d = _frozen(d)
        if d.ndim != 1:
            raise ValueError("diagonal expects a vector")
        return cls("diagonal", d.shape[0], d)

    @classmethod
    def dense(cls, m):
        m = _frozen(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"dense transition must be square, got {m.shape}")
        return cls("dense", m.shape[0], m)

    @classmethod
    def permutation(cls, perm):
        perm = _frozen(perm, dtype=np.int64)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.shape[0])):
            raise ValueError(f"not a permutation: {perm.tolist()}")
        return cls("permutation", perm.shape[0], perm)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: matrix is {self.dim}, vector {x.shape}")
        if self.kind == "identity":
            return x.copy()
        if self.kind == "zero":
            return np.zeros(self.dim)
        if self.kind == "scaled":
            return self.data * x
        if self.kind == "diagonal":
            return self.data * x
        if self.kind == "permutation":
            return x[self.data]
        return self.data @ x

    def densify(self) -> np.ndarray:
        n = self.dim
        if self.kind == "identity":
            return np.eye(n)
        if self.kind == "zero":
            return np.zeros((n, n))
        if self.kind == "scaled":
            return self.data * np.eye(n)
        if self.kind == "diagonal":
            return np.diag(self.data)
        if self.kind == "permutation":
            m = np.zeros((n, n))
            m[np.arange(n), self.data] = 1.0
            return m
        return np.array(self.data)

    def diagonal_values(self) -> np.ndarray:
        if self.kind == "diagonal":
            return np.array(self.data)
        return np.diag(self.densify()).copy()

    def __matmul__(self, other: "TransitionMatrix") -> "TransitionMatrix":
        return compose_matrices(other, self)

    def __repr__(self):
        return f"TransitionMatrix({self.kind}, dim={self.dim})"


def compose_matrices(earlier: TransitionMatrix, later: TransitionMatrix) -> TransitionMatrix:
    """Return ``later @ earlier`` with the tightest exact tag."""
    if earlier.dim != later.dim:
        raise ValueError(f"dimension mismatch: {earlier.dim} vs {later.dim}")
    n = later.dim
    if later.kind == "zero" or earlier.kind == "zero":
        return TransitionMatrix.zero(n)
    if later.kind == "identity":
        return earlier
    if earlier.kind == "identity":
        return later
    kinds = {earlier.kind, later.kind}
    if kinds == {"scaled"}:
        return TransitionMatrix.scaled(later.data * earlier.data, n)
    if kinds <= {"scaled", "diagonal"}:
        return TransitionMatrix.diagonal(later.diagonal_values() * earlier.diagonal_values())
    if kinds == {"permutation"}:
        return TransitionMatrix.permutation(earlier.data[later.data])
    return TransitionMatrix.dense(later.densify() @ earlier.densify())


@dataclass(frozen=True, eq=False)
class AffineElement:
    """The map ``x -> A x + b``."""

    A: TransitionMatrix
    b: np.ndarray

    def __post_init__(self):
        b = _frozen(self.b)
        if b.shape != (self.A.dim,):
            raise ValueError(f"offset shape {b.shape} does not match dim {self.A.dim}")
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.A.dim

    def __call__(self, x):
        return self.A.apply(x) + self.b


def identity_element(dim) -> AffineElement:
    return AffineElement(TransitionMatrix.identity(dim), np.zeros(dim))


def compose_affine(earlier: AffineElement, later: AffineElement) -> AffineElement:
    if earlier.dim != later.dim:
        raise ValueError(f"dimension mismatch: {earlier.dim} vs {later.dim}")
    return AffineElement(compose_matrices(earlier.A, later.A), later.A.apply(earlier.b) + later.b)


AFFINE = pscan.ScanOperator(compose_affine)


@dataclass(frozen=True, eq=False)
class StateTrajectory:
    x0: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 1 or x0.shape != (states.shape[1],):
            raise ValueError(f"bad trajectory shapes x0={x0.shape} states={states.shape}")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "states", states)

    @property
    def T(self):
        return self.states.shape[0]

    @property
    def D(self):
        return self.states.shape[1]

    def previous(self) -> np.ndarray:
        """States ``x_0 .. x_{T-1}``, the inputs to ``f_1 .. f_T``."""
        return np.vstack([self.x0[None, :], self.states[:-1]])

    def flat(self) -> np.ndarray:
        return self.states.reshape(-1)


# ---------------------------------------------------------------------------
# stacked (homogeneous) representation


@dataclass(eq=False)
class AffineStack:
    """``T`` affine elements sharing one tag, stored contiguously.

    ``a`` has shape ``(T, 0)`` for identity/zero, ``(T,)`` for scaled,
    ``(T, D)`` for diagonal and permutation (gather indices) and
    ``(T, D, D)`` for dense. ``b`` is ``(T, D)``.
    """

    kind: str
    a: np.ndarray
    b: np.ndarray

    @property
    def T(self):
        return self.b.shape[0]

    @property
    def D(self):
        return self.b.shape[1]

    def element(self, t) -> AffineElement:
        D, a = self.D, self.a[t]
        if self.kind == "identity":
            A = TransitionMatrix.identity(D)
        elif self.kind == "zero":
            A = TransitionMatrix.zero(D)
        elif self.kind == "scaled":
            A = TransitionMatrix.scaled(a, D)
        elif self.kind == "diagonal":
            A = TransitionMatrix.diagonal(a)
        elif self.kind == "permutation":
            A = TransitionMatrix.permutation(a)
        else:
            A = TransitionMatrix.dense(a)
        return AffineElement(A, self.b[t])

    def elements(self) -> list:
        return [self.element(t) for t in range(self.T)]


def stack_elements(elems: Sequence[AffineElement]) -> Optional[AffineStack]:
    """Stack a homogeneous sequence; ``None`` if tags are mixed."""
    kinds = {e.A.kind for e in elems}
    if len(kinds) != 1:
        return None
    kind = kinds.pop()
    T, D = len(elems), elems[0].dim
    b = np.stack([e.b for e in elems])
    if kind in ("identity", "zero"):
        a = np.zeros((T, 0))
    elif kind == "scaled":
        a = np.array([e.A.data for e in elems], dtype=float)
    else:
        a = np.stack([e.A.data for e in elems])
    if b.shape != (T, D) or any(e.dim != D for e in elems):
        raise ValueError("dimension mismatch within sequence")
    return AffineStack(kind, a, b)


def _bmv(A, x):
    return np.einsum("tij,tj->ti", A, x)


def _combine_dense(earlier, later):
    (Ae, be), (Al, bl) = earlier, later
    return Al @ Ae, _bmv(Al, be) + bl


def _combine_diagonal(earlier, later):
    (Ae, be), (Al, bl) = earlier, later
    return Al * Ae, Al * be + bl


def _combine_scaled(earlier, later):
    (Ae, be), (Al, bl) = earlier, later
    return Al * Ae, Al[:, None] * be + bl


def _combine_identity(earlier, later):
    (Ae, be), (_, bl) = earlier, later
    return Ae, be + bl


def _combine_zero(earlier, later):
    return later


def _combine_permutation(earlier, later):
    (Pe, be), (Pl, bl) = earlier, later
    return np.take_along_axis(Pe, Pl, axis=1), np.take_along_axis(be, Pl, axis=1) + bl


_COMBINE = {
    "dense": _combine_dense,
    "diagonal": _combine_diagonal,
    "scaled": _combine_scaled,
    "identity": _combine_identity,
    "zero": _combine_zero,
    "permutation": _combine_permutation,
}


def apply_stack(kind, a, x):
    """Apply each of ``T`` stacked matrices to the matching row of ``x``."""
    if kind == "dense":
        return _bmv(a, x)
    if kind == "diagonal":
        return a * x
    if kind == "scaled":
        return a[:, None] * x
    if kind == "identity":
        return x.copy()
    if kind == "zero":
        return np.zeros_like(x)
    return np.take_along_axis(x, a, axis=1)


def scan_stack(stack: AffineStack) -> AffineStack:
    a, b = pscan.associative_scan(_COMBINE[stack.kind], (stack.a, stack.b))
    return AffineStack(stack.kind, a, b)


def _check_inputs(x0, stack: AffineStack):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (stack.D,):
        raise ValueError(f"dimension mismatch: x0 {x0.shape}, elements dim {stack.D}")
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(stack.b))):
        raise ValueError("non-finite input")
    if stack.kind != "permutation" and not np.all(np.isfinite(stack.a)):
        raise ValueError("non-finite input")
    return x0


def evaluate_stack_sequential(x0, stack: AffineStack) -> np.ndarray:
    x = _check_inputs(x0, stack)
    out = np.empty_like(stack.b)
    k, a, b = stack.kind, stack.a, stack.b
    for t in range(stack.T):
        if k == "dense":
            x = a[t] @ x + b[t]
        elif k in ("diagonal", "scaled"):
            x = a[t] * x + b[t]
        elif k == "identity":
            x = x + b[t]
        elif k == "zero":
            x = b[t].copy()
        else:
            x = x[a[t]] + b[t]
        out[t] = x
    return out


def evaluate_stack_parallel(x0, stack: AffineStack) -> np.ndarray:
    x0 = _check_inputs(x0, stack)
    with np.errstate(over="ignore", invalid="ignore"):
        cum = scan_stack(stack)
    finite_a = cum.kind == "permutation" or np.all(np.isfinite(cum.a))
    if not (finite_a and np.all(np.isfinite(cum.b))):
        raise NumericalOverflowError("numerical overflow in scan")
    x = np.broadcast_to(x0, cum.b.shape)
    return apply_stack(cum.kind, cum.a, x) + cum.b


def _as_list(elems):
    if isinstance(elems, AffineStack):
        return elems.elements()
    elems = list(elems)
    if not elems:
        raise ValueError("empty sequence")
    return elems


def evaluate_lds_sequential(x0, elems) -> StateTrajectory:
    if isinstance(elems, AffineStack):
        return StateTrajectory(x0, evaluate_stack_sequential(x0, elems))
    elems = _as_list(elems)
    x = np.asarray(x0, dtype=float)
    if x.shape != (elems[0].dim,):
        raise ValueError(f"dimension mismatch: x0 {x.shape}, elements dim {elems[0].dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    out = []
    for e in elems:
        x = e(x)
        out.append(x)
    return StateTrajectory(x0, np.array(out))


def evaluate_lds_parallel(x0, elems, workers: Optional[int] = None) -> StateTrajectory:
    """Evaluate the recursion with the parallel scan.

    Homogeneous sequences use the vectorised stacked scan; mixed-tag
    sequences scan :class:`AffineElement` objects, optionally over
    ``workers`` threads.
    """
    if isinstance(elems, AffineStack):
        return StateTrajectory(x0, evaluate_stack_parallel(x0, elems))
    elems = _as_list(elems)
    stack = stack_elements(elems)
    if stack is not None:
        return StateTrajectory(x0, evaluate_stack_parallel(x0, stack))
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (elems[0].dim,):
        raise ValueError(f"dimension mismatch: x0 {x0.shape}, elements dim {elems[0].dim}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("non-finite input")
    cum = pscan.inclusive_scan(elems, AFFINE, workers=workers)
    states = np.array([c(x0) for c in cum])
    dense_ok = all(np.all(np.isfinite(c.A.data)) for c in cum if c.A.kind in ("dense", "diagonal", "scaled"))
    if not (dense_ok and np.all(np.isfinite(states))):
        raise NumericalOverflowError("numerical overflow in scan")
    return StateTrajectory(x0, states)
