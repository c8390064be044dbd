"""Seed handling.

Every random quantity is drawn from a ``numpy.random.Generator``. Streams
that must be reproducible independently of the order in which they are
visited (per chain, per genealogical index) are derived from the triple
``(seed, tag, index)``: the tag string is hashed with CRC-32 and, together
with the integer path ``index``, becomes the ``spawn_key`` of a
``SeedSequence`` whose entropy is the user seed.
"""
from __future__ import annotations

import os
import zlib

import numpy as np

SEED_ENV = "ABCP_SEED"
DEFAULT_SEED = 20110101


def default_seed() -> int:
    val = os.environ.get(SEED_ENV)
    return int(val) if val else DEFAULT_SEED


def tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def derive_rng(seed: int, tag: str, index=()) -> np.random.Generator:
    """Generator for the stream ``(seed, tag, index)``."""
    ss = np.random.SeedSequence(
        entropy=int(seed) & (2**64 - 1),
        spawn_key=(tag_key(tag),) + tuple(int(i) for i in index),
    )
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class UniformStream:
    """Uniform(0, 1) floats served from chunks drawn from `rng`.

    Per-call overhead of numpy dominates the tiny draws made by the tree
    samplers; buffering keeps them reproducible from the generator state
    while working on plain Python floats.
    """

    __slots__ = ("rng", "chunk", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator, chunk: int = 4096):
        self.rng = rng
        self.chunk = chunk
        self._buf: list = []
        self._pos = 0

    def take(self, m: int) -> list:
        if self._pos + m > len(self._buf):
            rest = self._buf[self._pos:]
            self._buf = rest + self.rng.random(max(self.chunk, m)).tolist()
            self._pos = 0
        out = self._buf[self._pos: self._pos + m]
        self._pos += m
        return out

    def next(self) -> float:
        pos = self._pos
        if pos >= len(self._buf):
            self._buf = self.rng.random(self.chunk).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]
