"""Per-vertex randomness for the genealogical and mass constructions.

A :class:`Driver` holds, for one genealogical index, ``k`` mass vectors
drawn from nu, ``k`` uniform permutations of ``[k]`` and (for tree
constructions) a paintbox colour for every label of the ground set.

Row ``i`` of a cut-and-paste step sends a label of colour ``c`` to column
``perm[i, c]``. This is the matrix construction with the blocks of the
i-th paintbox addressed by colour rather than by least element; the two
parametrisations define the same random partition (see
:meth:`Driver.as_cp_driver`).
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from ._random import UniformStream, derive_rng
from .paintbox import MixtureMeasure, _colour_partition

__all__ = ["Driver", "SequentialDrivers", "KeyedDrivers", "draw_driver"]


@dataclass(frozen=True)
class Driver:
    masses: list          # k rows of length k; row i is s_i
    perm: list            # perm[i][c] = column of colour c in row i
    colours: list | None  # colours[i][j] = colour of the j-th ground label in row i

    def column_masses(self, pieces) -> np.ndarray:
        """Column totals ``sum_i pieces[i] * s_{i, c}`` routed by `perm`."""
        k = len(self.perm)
        out = [0.0] * k
        for i, w in enumerate(pieces):
            for c, m in enumerate(self.masses[i]):
                out[self.perm[i][c]] += w * m
        return np.array(out)

    def as_cp_driver(self, ground):
        """The equivalent (cuts, sigma) driver on `ground`."""
        from .cp_kernel import CPDriver

        ground = tuple(ground)
        k = len(self.perm)
        cuts, sigma = [], []
        for i in range(k):
            col = list(self.colours[i])
            C = _colour_partition(col, ground)
            # block index of each colour, blocks ordered by least element
            first = {}
            for c in col:
                first.setdefault(c, len(first))
            inv = [0] * k
            for c in range(k):
                inv[self.perm[i][c]] = c
            nb = len(first)
            extra = iter(range(nb, k))
            sigma.append(tuple(first[inv[m]] if inv[m] in first else next(extra)
                               for m in range(k)))
            cuts.append(C)
        return CPDriver(tuple(cuts), tuple(sigma))


def draw_driver(nu: MixtureMeasure, k: int, n: int | None, stream) -> Driver:
    """Draw a driver; `n` is the ground-set size (``None`` for mass-only).

    `stream` is a :class:`~abcp._random.UniformStream` or a generator.
    """
    if not isinstance(stream, UniformStream):
        stream = UniformStream(stream, chunk=k * (k + 1 + (n or 0)))
    bisect_right = bisect.bisect_right
    ks = range(k)
    nn = n or 0
    w = k + nn
    u_all = stream.take(k * w)
    masses, perm, colours = [], [], ([] if n is not None else None)
    for i in ks:
        row, cum = nu.draw_row(stream)
        if len(row) < k:
            row = row + [0.0] * (k - len(row))
        masses.append(row)
        u = u_all[i * w:(i + 1) * w]
        perm.append(sorted(ks, key=u.__getitem__))
        if n is not None:
            top, last = cum[-1], len(cum) - 1
            cs = [bisect_right(cum, v * top) for v in u[k:]]
            colours.append([c if c < last else last for c in cs])
    return Driver(masses, perm, colours)


class SequentialDrivers:
    """Fresh driver from `rng` on every request."""

    def __init__(self, nu: MixtureMeasure, k: int, n: int | None, rng: np.random.Generator):
        self.nu, self.k, self.n = nu, k, n
        self.stream = rng if isinstance(rng, UniformStream) else UniformStream(rng)

    def __call__(self, u) -> Driver:
        return draw_driver(self.nu, self.k, self.n, self.stream)


class KeyedDrivers:
    """Driver for index `u` drawn from the stream ``(seed, tag, prefix + u)``.

    Repeated requests for the same index return the same driver, whatever
    the order of the requests.
    """

    def __init__(self, nu: MixtureMeasure, k: int, n: int | None, seed: int,
                 tag: str = "genealogy", prefix: tuple = ()):
        self.nu, self.k, self.n = nu, k, n
        self.seed, self.tag, self.prefix = seed, tag, tuple(prefix)
        self._cache: dict = {}

    def __call__(self, u) -> Driver:
        u = tuple(u)
        d = self._cache.get(u)
        if d is None:
            rng = derive_rng(self.seed, self.tag, self.prefix + (len(u),) + u)
            d = self._cache[u] = draw_driver(self.nu, self.k, self.n, rng)
        return d
