"""
Seeded, splittable random streams.

Streams are built on numpy's counter-based Philox bit generator, so a given
seed and key path yields the same numbers on every platform.
"""
import zlib
from typing import Sequence, Tuple, Union

import numpy as np

Key = Union[int, str, float]


def _key_to_int(key: Key) -> int:
    if isinstance(key, bool):
        return int(key)
    if isinstance(key, int):
        if key < 0:
            raise ValueError(f"stream keys must be non-negative, got {key}")
        return key
    # floats (e.g. SNR values) and strings hash through their text form
    return zlib.crc32(repr(key).encode("utf-8"))


class Rng:
    """A deterministic random stream identified by ``seed`` and a key path."""

    def __init__(self, seed: int, path: Tuple[int, ...] = ()):
        if seed < 0 or seed >= 2 ** 64:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        self.seed = int(seed)
        self.path = tuple(path)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def child(self, *keys: Key) -> "Rng":
        """Independent substream; same keys always give the same stream."""
        return Rng(self.seed, self.path + tuple(_key_to_int(k) for k in keys))

    def normal(self, shape, std: float = 1.0) -> np.ndarray:
        return self._gen.standard_normal(size=shape) * std

    def uniform(self, low: float, high: float, shape=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def integers(self, low: int, high: int, shape=None) -> np.ndarray:
        return self._gen.integers(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, options: Sequence):
        return options[int(self._gen.integers(0, len(options)))]

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, path={self.path})"
