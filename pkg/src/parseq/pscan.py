"""Work-efficient inclusive scan (up-sweep / down-sweep).

Elements are combined with a binary associative ``combine(earlier, later)``
so that ``out[k] = e[k] * e[k-1] * ... * e[0]`` in left-action order: for
matrices, ``out[k] = A_k ... A_1 A_0``.

Two execution back-ends share one schedule:

* :func:`inclusive_scan` moves Python objects, one combine per pair, and can
  run the pairs of a level on a thread pool.
* :func:`associative_scan` works on "stacked" elements (a tuple of arrays
  sharing a leading axis) and performs every combine of a level in a single
  vectorised call.
"""
from __future__ import annotations

import math
import os
from functools import lru_cache
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class ScanOperator:
    combine: Callable[[Any, Any], Any]
    identity: Any = None


@dataclass(frozen=True)
class ScanPlan:
    """Pairs ``(earlier, later)`` updated at each sweep level.

    Levels beyond the input length are simply dropped rather than padded;
    since ``out[i]`` only ever reads positions ``< i``, this gives the same
    result as padding with the identity.
    """

    length: int
    up: tuple = field(repr=False)
    down: tuple = field(repr=False)
    inclusive: bool = True

    @property
    def levels(self) -> int:
        return math.ceil(math.log2(self.length)) if self.length > 1 else 0

    @property
    def combine_count(self) -> int:
        return sum(len(l) for l, _ in self.up) + sum(len(l) for l, _ in self.down)

    def sweeps(self):
        yield from self.up
        yield from self.down


@lru_cache(maxsize=64)
def make_plan(n: int) -> ScanPlan:
    if n < 1:
        raise ValueError("empty scan")
    levels = math.ceil(math.log2(n)) if n > 1 else 0
    up, down = [], []
    for d in range(levels):
        half, stride = 1 << d, 1 << (d + 1)
        later = np.arange(stride - 1, n, stride)
        if later.size:
            up.append((later - half, later))
    for d in range(levels - 2, -1, -1):
        half, stride = 1 << d, 1 << (d + 1)
        later = np.arange(stride - 1 + half, n, stride)
        if later.size:
            down.append((later - half, later))
    return ScanPlan(length=n, up=tuple(up), down=tuple(down))


def default_workers() -> int:
    env = os.environ.get("PARSEQ_THREADS")
    if env:
        return max(1, int(env))
    return 1


def sequential_scan(elements: Sequence, op: ScanOperator) -> list:
    """Reference left-to-right scan."""
    if len(elements) == 0:
        raise ValueError("empty scan")
    out = [elements[0]]
    for e in elements[1:]:
        out.append(op.combine(out[-1], e))
    return out


def inclusive_scan(elements: Sequence, op: ScanOperator, workers: Optional[int] = None) -> list:
    """Scan a list of elements; ``workers > 1`` runs each level's combines concurrently."""
    n = len(elements)
    plan = make_plan(n)
    buf = list(elements)
    workers = default_workers() if workers is None else workers
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for earlier, later in plan.sweeps():
            pairs = list(zip(earlier.tolist(), later.tolist()))
            if pool is not None and len(pairs) > 1:
                results = list(pool.map(lambda p: op.combine(buf[p[0]], buf[p[1]]), pairs))
            else:
                results = [op.combine(buf[i], buf[j]) for i, j in pairs]
            for (_, j), r in zip(pairs, results):
                buf[j] = r
    finally:
        if pool is not None:
            pool.shutdown()
    return buf


def _take(tree, idx):
    return tuple(leaf[idx] for leaf in tree)


def _put(tree, idx, values):
    for leaf, v in zip(tree, values):
        leaf[idx] = v


def associative_scan(combine: Callable, elems: tuple) -> tuple:
    """Scan stacked elements.

    ``elems`` is a tuple of arrays whose leading axis indexes the sequence;
    ``combine(earlier, later)`` receives two such tuples of equal batch size
    and returns one. Inputs are not modified.
    """
    elems = tuple(np.array(leaf, copy=True) for leaf in elems)
    n = elems[0].shape[0]
    if any(leaf.shape[0] != n for leaf in elems):
        raise ValueError("stacked leaves disagree on sequence length")
    plan = make_plan(n)
    for earlier, later in plan.sweeps():
        _put(elems, later, combine(_take(elems, earlier), _take(elems, later)))
    return elems
