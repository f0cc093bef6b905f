"""Small splitmix64 generator usable from both Python and numba kernels.

The whole state is a single ``uint64`` held in a length-1 array so it can be
mutated in place by jitted code and persisted alongside the model.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


def new_state(seed):
    """Return a fresh generator state derived from an integer seed."""
    seq = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return seq.generate_state(1, dtype=np.uint64)


@njit(cache=True)
def next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def uniform(state):
    """Uniform float in [0, 1)."""
    return (next_u64(state) >> _S11) * _INV53


@njit(cache=True)
def randint(state, n):
    """Uniform integer in [0, n)."""
    r = int(uniform(state) * n)
    if r >= n:
        r = n - 1
    return r


@njit(cache=True)
def normal(state):
    # Box-Muller; one variate per call is plenty for the few places we need it
    u1 = uniform(state)
    while u1 <= 0.0:
        u1 = uniform(state)
    u2 = uniform(state)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@njit(cache=True)
def permutation(state, n):
    out = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = randint(state, i + 1)
        tmp = out[i]
        out[i] = out[j]
        out[j] = tmp
    return out
