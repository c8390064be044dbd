"""Cut-and-paste transitions on set partitions.

A cut-and-paste step cuts every block of the current partition with its
own random partition and then pastes together pieces that receive the same
column label. With paintbox cuts and uniform labels on ``[k]`` this is the
CP(nu) chain, whose transition probabilities are available in closed form
(:func:`cp_prob`).
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._random import UniformStream
from .combinatorics import SetPartition, enumerate_partitions, one_block, restrict
from .paintbox import (
    LabelMeasure, MixtureMeasure, _colour_partition, _colours, size_biased_labels)

__all__ = [
    "PartitionKernelFamily",
    "CPDriver",
    "cp_prob",
    "cp_apply",
    "cp_sample",
    "general_cp_sample",
    "cp_matrix",
    "cp_family",
    "StateSpaceTooLarge",
]

DEFAULT_MAX_N = 10


class StateSpaceTooLarge(ValueError):
    pass


@dataclass
class PartitionKernelFamily:
    """A family ``{p_b}`` of Markov kernels on partitions of finite sets.

    Attributes
    ----------
    evaluator : callable
        ``evaluator(b, B, B2)`` is the probability of moving from partition
        `B` of the label tuple `b` to partition `B2` of `b`.
    sampler : callable, optional
        ``sampler(b, B, rng)`` draws the next partition of `b`.
    k : int or None
        Bound on the number of blocks; ``None`` when unbounded.
    """

    evaluator: Callable[[tuple, SetPartition, SetPartition], float]
    sampler: Callable | None = None
    k: int | None = None
    description: str = ""
    splitter: Callable | None = None
    """Optional ``splitter(blocks, stream)``: the sampler on raw label
    tuples, returning the non-empty new blocks as label lists in any order."""

    def prob(self, b, B, B2) -> float:
        return self.evaluator(tuple(b), B, B2)

    def stay_one_block(self, b, B) -> float:
        """``p_b(B, 1_b)``."""
        b = tuple(b)
        return self.evaluator(b, B, one_block(b))


@dataclass(frozen=True)
class CPDriver:
    """Cutting partitions and column permutations for one CP step.

    ``cuts[i]`` is the partition cutting row ``i`` (the i-th block of the
    current partition, blocks by least element). ``sigma[i][c]`` is the
    0-based index of the block of ``cuts[i]`` that goes to column ``c``;
    indices past the last block of ``cuts[i]`` stand for the empty set.
    """

    cuts: tuple
    sigma: tuple = field(default=())

    def __post_init__(self):
        k = len(self.sigma)
        for s in self.sigma:
            if sorted(s) != list(range(k)):
                raise ValueError("each sigma_i must be a permutation of range(k)")
        if len(self.cuts) != k:
            raise ValueError("need one cutting partition per row")


def _falling(k: int, r: int) -> float:
    return math.factorial(k) / math.factorial(k - r)


def cp_prob(B: SetPartition, B2: SetPartition, nu: MixtureMeasure, k: int) -> float:
    """Transition probability from `B` to `B2` of the CP(nu) chain on
    partitions with at most `k` blocks."""
    if B.ground != B2.ground:
        raise ValueError("partitions live on different ground sets")
    if len(B) > k:
        raise ValueError("initial partition has more than k=%d blocks" % k)
    r2 = len(B2)
    if r2 > k:
        return 0.0
    p = _falling(k, r2)
    for b in B.blocks:
        sub = restrict(B2, b)
        rb = len(sub)
        p *= nu.prob(sub) / _falling(k, rb)
        if p == 0.0:
            break
    return p


def cp_apply(B: SetPartition, driver: CPDriver) -> SetPartition:
    """Column totals of the matrix ``B_i ∩ C_{i, sigma_i(c)}``."""
    k = len(driver.sigma)
    if len(B) > k:
        raise ValueError("partition has more blocks than the driver has rows")
    cols: list = [[] for _ in range(k)]
    for i, b in enumerate(B.blocks):
        cut = driver.cuts[i]
        where = cut.block_of()
        try:
            idx = [where[x] for x in b]
        except KeyError:
            raise ValueError("cutting partition does not cover the block") from None
        pos = {j: c for c, j in enumerate(driver.sigma[i])}
        for x, j in zip(b, idx):
            cols[pos[j]].append(x)
    bl = tuple(sorted((tuple(sorted(c)) for c in cols if c), key=lambda b: b[0]))
    return SetPartition._trusted(bl, B.ground)


def _random_driver(ground: tuple, nu: MixtureMeasure, k: int, rng) -> CPDriver:
    masses = nu.sample_masses(rng, k)
    cuts = tuple(_colour_partition(_colours(m, len(ground), rng).tolist(), ground)
                 for m in masses)
    sigma = tuple(tuple(int(x) for x in rng.permutation(k)) for _ in range(k))
    return CPDriver(cuts, sigma)


def cp_sample(B: SetPartition, nu: MixtureMeasure, k: int, rng: np.random.Generator) -> SetPartition:
    """One CP(nu) step: `k` i.i.d. paintbox cuts of the ground set and `k`
    uniform column permutations, combined by :func:`cp_apply`."""
    if len(B) > k:
        raise ValueError("partition has more than k=%d blocks" % k)
    return cp_apply(B, _random_driver(B.ground, nu, k, rng))


def _uniform_perm(u: list) -> list:
    """Ranks of the uniforms `u`: a uniform permutation of ``range(len(u))``."""
    return sorted(range(len(u)), key=u.__getitem__)


def _cp_split(blocks: Sequence[tuple], nu: MixtureMeasure, k: int, stream) -> list:
    """Column assignment of a CP(nu) step, label by label.

    Equal in law to :func:`cp_sample`: colours from a paintbox composed
    with a uniform permutation of ``[k]`` give every row a uniform
    injection from its pieces into the columns. Returns the list of
    non-empty columns as lists of labels.
    """
    cols: list = [[] for _ in range(k)]
    bisect_right = bisect.bisect_right
    ks = range(k)
    u_all = stream.take(sum(k + len(b) for b in blocks))
    at = 0
    for b in blocks:
        cum = nu.draw_cumulative(stream)
        top = cum[-1]
        last = len(cum) - 1
        u = u_all[at:at + k]
        at += k
        perm = sorted(ks, key=u.__getitem__)
        for x in b:
            c = bisect_right(cum, u_all[at] * top)
            at += 1
            cols[perm[c if c < last else last]].append(x)
    return [c for c in cols if c]


def cp_family(nu: MixtureMeasure, k: int) -> PartitionKernelFamily:
    """The CP(nu) kernels as a :class:`PartitionKernelFamily`."""
    if nu.k > k:
        raise ValueError("nu lives on a simplex of dimension %d > k=%d" % (nu.k, k))
    cache: dict = {}

    def evaluator(b, B, B2):
        # value depends only on the block-size pattern of B2 inside each block of B
        key = _shape_key(B, B2)
        val = cache.get(key)
        if val is None:
            val = cache[key] = cp_prob(B, B2, nu, k)
        return val

    def sampler(b, B, rng):
        if not isinstance(rng, UniformStream):
            rng = UniformStream(rng, chunk=64)
        cols = _cp_split(B.blocks, nu, k, rng)
        bl = tuple(sorted((tuple(sorted(c)) for c in cols), key=lambda x: x[0]))
        return SetPartition._trusted(bl, tuple(b))

    def splitter(blocks, stream):
        return _cp_split(blocks, nu, k, stream)

    return PartitionKernelFamily(evaluator, sampler, k, "CP(%r, k=%d)" % (nu, k), splitter)


def _shape_key(B: SetPartition, B2: SetPartition) -> tuple:
    where = B2.block_of()
    rows = []
    for b in B.blocks:
        cnt: dict = {}
        for x in b:
            j = where[x]
            cnt[j] = cnt.get(j, 0) + 1
        rows.append(cnt)
    # number of blocks of B2 and, per row, the multiset of piece sizes
    return (len(B2), tuple(sorted(tuple(sorted(r.values())) for r in rows)))


def general_cp_sample(pi: SetPartition, cutter: Callable, mu: LabelMeasure,
                      rng: np.random.Generator) -> SetPartition:
    """Cut-and-paste step with arbitrary cuts and a finite label measure.

    Parameters
    ----------
    pi : SetPartition
        Current state.
    cutter : callable
        ``cutter(block, rng)`` returns a :class:`SetPartition` of `block`.
    mu : LabelMeasure
        Labels are drawn from `mu` without replacement, in size-biased
        order, separately for every block of `pi`.
    """
    groups: dict = {}
    for b in pi.blocks:
        C = cutter(b, rng)
        if C.ground != b:
            raise ValueError("cutter returned a partition of the wrong set")
        ki = len(C)
        sigma = rng.permutation(ki)
        m = size_biased_labels(mu, ki, rng)
        for j, piece in enumerate(C.blocks):
            groups.setdefault(m[sigma[j]], []).extend(piece)
    bl = tuple(sorted((tuple(sorted(g)) for g in groups.values()), key=lambda b: b[0]))
    return SetPartition._trusted(bl, pi.ground)


@dataclass
class StochasticMatrix:
    """Row-stochastic matrix indexed by an ordered list of states."""

    states: list
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] != len(self.states):
            raise ValueError("matrix must be square and match the states")
        if (e < 0).any():
            raise ValueError("negative entries")
        if not np.allclose(e.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("rows do not sum to 1")
        self.entries = e

    def index(self, state) -> int:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = self.__dict__["_idx"] = {s: i for i, s in enumerate(self.states)}
        return idx[state]

    def row(self, state) -> np.ndarray:
        return self.entries[self.index(state)]

    def to_dict(self) -> dict:
        return {"states": [s.to_list() for s in self.states],
                "rows": self.entries.tolist()}


def cp_matrix(n: int, k: int, nu: MixtureMeasure, max_n: int = DEFAULT_MAX_N) -> StochasticMatrix:
    """CP(nu) transition matrix on partitions of ``[n]`` with at most `k`
    blocks, states in :func:`enumerate_partitions` order."""
    if n > max_n:
        raise StateSpaceTooLarge("n=%d exceeds the cap %d" % (n, max_n))
    fam = cp_family(nu, k)
    states = enumerate_partitions(n, k)
    g = states[0].ground
    M = np.array([[fam.evaluator(g, a, b) for b in states] for a in states])
    return StochasticMatrix(states, M)
