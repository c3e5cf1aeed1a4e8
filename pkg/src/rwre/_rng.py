"""Counter-based pseudorandom numbers.

Every random draw in the package is a pure function of an integer key
``(seed, tag, k1, k2, ...)`` hashed with the splitmix64 finaliser.  Draws are
therefore independent of query order, batch composition and worker count.
The numpy routines operate on arrays; ``mix64_nb`` / ``uniform_nb`` are the
numba twins used inside compiled kernels and produce identical bits.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# stream tags
TAG_ENV = 1
TAG_WALK = 2
TAG_COMPOSITE = 3
TAG_CT = 4
TAG_ZRP_INIT = 5
TAG_ZRP_DYN = 6
TAG_INIT = 7
TAG_BATTERY = 8
TAG_SAMPLER = 9


def _as_u64(a):
    a = np.asarray(a)
    if a.dtype == np.uint64:
        return a
    return np.asarray(a, dtype=np.int64).view(np.uint64)


def mix64(x):
    """splitmix64 finaliser applied elementwise to a uint64 array."""
    z = np.atleast_1d(_as_u64(x)) + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def hash_keys(seed, tag, *keys):
    """Hash ``(seed, tag, *keys)``; keys broadcast against each other."""
    h = mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    h = mix64(h ^ _as_u64(np.int64(tag)))
    for k in keys:
        h = mix64(h ^ _as_u64(k))
    return h


def extend(h, *keys):
    """Continue hashing from a precomputed key prefix."""
    for k in keys:
        h = mix64(h ^ _as_u64(k))
    return h


def to_unit(h):
    """Map hashes to floats in the open interval (0, 1)."""
    return ((h >> _S11).astype(np.float64) + 0.5) * _INV53


def uniform(seed, tag, *keys):
    return to_unit(hash_keys(seed, tag, *keys))


@njit(cache=True)
def mix64_nb(x):
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def prefix_nb(seed, tag):
    h = mix64_nb(np.uint64(seed))
    return mix64_nb(h ^ np.uint64(tag))


@njit(cache=True)
def uniform_nb(prefix, k1, k2):
    h = mix64_nb(prefix ^ np.uint64(k1))
    h = mix64_nb(h ^ np.uint64(k2))
    return (np.float64(h >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)
