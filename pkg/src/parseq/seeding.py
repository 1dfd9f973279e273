"""Stateless seed mixing.

Every random stream in the package is derived from integer keys with
SplitMix64 finalisers, so a draw depends only on its key (for example
``(seed, t, probe)``) and never on call order or thread schedule.
"""
import hashlib

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def splitmix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorised :func:`splitmix64` over a uint64 array."""
    z = np.asarray(z, dtype=np.uint64) + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _token(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK
    digest = hashlib.blake2b(str(part).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def mix(*parts) -> int:
    """Fold ints and strings into a single 64-bit seed.

    >>> mix(1, "s5", 64) == mix(1, "s5", 64)
    True
    """
    h = 0
    for part in parts:
        h = splitmix64(h ^ _token(part))
    return h


def rng(*parts) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=mix(*parts)))
