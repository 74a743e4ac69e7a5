"""Deterministic, splittable random streams.

Every stream is keyed by a master seed plus a structural path of
``(label, index)`` pairs.  The key is hashed by :class:`numpy.random.SeedSequence`
into a Philox counter-based generator, so the draws for a key never depend on
which other keys were used before, or on how work is split across workers.

All primitives are inverse-CDF transforms of the stream's uniform sequence,
which is consumed strictly in order.  Drawing ``n`` values at once or one at a
time yields the same numbers.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_BUFFER = 512
_HALF_ULP = 2.0 ** -54
_MASK64 = (1 << 64) - 1


class Label(enum.IntEnum):
    """Path labels used by the samplers when deriving sub-streams."""

    REALIZATION = 1
    REPLICATE = 2
    BRANCH = 3
    NODE = 4
    NETWORK = 5
    INTERVENTION = 6
    SEEDING = 7
    BOOTSTRAP = 8
    GRID = 9
    TASK = 10


@dataclass(frozen=True)
class StreamKey:
    master_seed: int
    path: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError(f"master seed must be a 64-bit unsigned integer, got {self.master_seed}")
        for label, index in self.path:
            if label < 0 or not 0 <= index <= _MASK64:
                raise ValueError(f"invalid path component ({label}, {index})")

    def child(self, label: int, index: int) -> "StreamKey":
        return StreamKey(self.master_seed, self.path + ((int(label), int(index)),))

    def spawn_key(self) -> tuple[int, ...]:
        return tuple(v for pair in self.path for v in pair)


class Stream:
    """A single logical random stream.  Not thread-safe; one task per stream."""

    __slots__ = ("key", "_rng", "_buf", "_pos")

    def __init__(self, key: StreamKey | int, *path: tuple[int, int]):
        if not isinstance(key, StreamKey):
            key = StreamKey(int(key), tuple((int(a), int(b)) for a, b in path))
        elif path:
            key = StreamKey(key.master_seed, key.path + tuple(path))
        self.key = key
        ss = np.random.SeedSequence(entropy=key.master_seed, spawn_key=key.spawn_key())
        self._rng = np.random.Generator(np.random.Philox(ss))
        self._buf = self._fill()
        self._pos = 0

    def child(self, label: int, index: int) -> "Stream":
        """Independent stream for a sub-task; does not consume draws from ``self``."""
        return Stream(self.key.child(label, index))

    def _fill(self) -> list[float]:
        # k/2^53 + 2^-54 lies strictly inside (0, 1)
        return (self._rng.random(_BUFFER) + _HALF_ULP).tolist()

    def uniform(self, size: int | None = None):
        if size is None:
            if self._pos == _BUFFER:
                self._buf = self._fill()
                self._pos = 0
            u = self._buf[self._pos]
            self._pos += 1
            return u
        out = np.empty(size)
        filled = 0
        while filled < size:
            if self._pos == _BUFFER:
                self._buf = self._fill()
                self._pos = 0
            take = min(size - filled, _BUFFER - self._pos)
            out[filled:filled + take] = self._buf[self._pos:self._pos + take]
            self._pos += take
            filled += take
        return out

    def exponential(self, rate: float, size: int | None = None):
        if not rate > 0:
            raise ValueError(f"exponential rate must be positive, got {rate}")
        if size is None:
            return -math.log(self.uniform()) / rate
        return -np.log(self.uniform(size)) / rate

    def gumbel(self, size: int | None = None):
        if size is None:
            return -math.log(-math.log(self.uniform()))
        return -np.log(-np.log(self.uniform(size)))

    def normal(self, sigma: float = 1.0, size: int | None = None):
        if sigma < 0 or math.isnan(sigma):
            raise ValueError(f"normal sigma must be nonnegative, got {sigma}")
        if size is None:
            return sigma * float(ndtri(self.uniform()))
        return sigma * ndtri(self.uniform(size))

    def bernoulli(self, p, size: int | None = None):
        """``u < p``: exact 0 never fires, exact 1 always fires."""
        if size is None and np.ndim(p) == 0:
            return self.uniform() < p
        n = size if size is not None else len(p)
        return self.uniform(n) < p

    def integers(self, n: int, size: int | None = None):
        """Uniform integers in ``[0, n)`` by inverse CDF."""
        if size is None:
            return min(int(self.uniform() * n), n - 1)
        return np.minimum((self.uniform(size) * n).astype(np.int64), n - 1)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")


def make_stream(seed: int, *path: tuple[int, int]) -> Stream:
    return Stream(StreamKey(int(seed), tuple((int(a), int(b)) for a, b in path)))
