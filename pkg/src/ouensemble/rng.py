"""Counter-based random streams.

Every variate is a pure function of ``(key, counter)``: the 64-bit key is
derived by hashing ``(seed, namespace..., realization, particle)`` and the
counter indexes draws inside that stream. Results therefore do not depend on
how realizations are scheduled across threads.

The bit generator is the SplitMix64 output function applied to
``key + (counter + 1) * golden``. The same arithmetic is used by the numpy
path (vectorised over uint64 arrays) and by the numba kernels, so both
backends see identical uniforms.
"""
import zlib

import numpy as np

from ._accel import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_M53 = 2.0**-53
_TWO_PI = 2.0 * np.pi


def _mix64(z):
    z = z ^ (z >> _S30)
    z = z * _M1
    z = z ^ (z >> _S27)
    z = z * _M2
    return z ^ (z >> _S31)


def _child_key(key, index):
    # index is uint64
    return _mix64(key ^ _mix64((index + _ONE) * GOLDEN))


def _bits(key, counter):
    return _mix64(key + (counter + _ONE) * GOLDEN)


@njit
def mix64_nb(z):
    z = z ^ (z >> _S30)
    z = z * _M1
    z = z ^ (z >> _S27)
    z = z * _M2
    return z ^ (z >> _S31)


@njit
def child_key_nb(key, index):
    return mix64_nb(key ^ mix64_nb((index + _ONE) * GOLDEN))


@njit
def bits_nb(key, counter):
    return mix64_nb(key + (counter + _ONE) * GOLDEN)


@njit
def uniform_nb(key, counter):
    return (np.float64(bits_nb(key, counter) >> _S11) + 0.5) * _TWO_M53


@njit
def normal_nb(key, index):
    """Standard normal number ``index`` of stream ``key`` (Box-Muller)."""
    c = np.uint64(index) * np.uint64(2)
    u1 = uniform_nb(key, c)
    u2 = uniform_nb(key, c + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def _u64(x):
    return np.asarray(x, dtype=np.uint64)


def mix64(z):
    with np.errstate(over="ignore"):
        return _mix64(_u64(z))


def child_key(key, index):
    with np.errstate(over="ignore"):
        return _child_key(_u64(key), _u64(index))


def uniform_at(key, counter):
    """Uniforms for broadcast arrays of keys and counters."""
    with np.errstate(over="ignore"):
        b = _bits(_u64(key), _u64(counter))
    return ((b >> _S11).astype(np.float64) + 0.5) * _TWO_M53


def normal_at(key, index):
    """Standard normals for broadcast arrays of keys and indices.

    Matches :func:`normal_nb` element for element.
    """
    c = _u64(index) * np.uint64(2)
    u1 = uniform_at(key, c)
    u2 = uniform_at(key, c + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def name_id(name):
    """Stable 32-bit identifier for a namespace label."""
    return zlib.crc32(name.encode("utf8"))


def derive_key(seed, *path):
    """Hash a seed and a path of ints/strings into a stream key."""
    key = mix64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    for part in path:
        if isinstance(part, str):
            part = name_id(part)
        key = child_key(key, part)
    return key


class Stream:
    """A batch of independent counter-based streams.

    ``key`` may be a scalar or an array of keys (e.g. one per realization);
    every draw of ``n`` values returns an array of shape ``key.shape + (n,)``
    and advances the shared counter by the number of uniforms consumed.
    Element ``i`` of a draw uses counter ``counter + i``, so particle ``i`` of
    realization ``r`` always sees the same uniforms.
    """

    def __init__(self, key, counter=0):
        self.key = _u64(key)
        self.counter = int(counter)

    @classmethod
    def from_seed(cls, seed, *path):
        return cls(derive_key(seed, *path))

    @property
    def shape(self):
        return self.key.shape

    def spawn(self, *path):
        key = self.key
        for part in path:
            if isinstance(part, str):
                part = name_id(part)
            key = child_key(key, part)
        return Stream(key)

    def uniform(self, n):
        idx = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return uniform_at(self.key[..., None], idx)

    def normal(self, n):
        u1 = self.uniform(n)
        u2 = self.uniform(n)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)

    def exponential(self, n):
        return -np.log(self.uniform(n))

    def __repr__(self):
        return f"Stream(shape={self.shape}, counter={self.counter})"
