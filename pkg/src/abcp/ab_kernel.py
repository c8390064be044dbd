"""Ancestral branching transitions on fragmentation trees.

Given a family of partition kernels ``p_b``, a new tree is grown from the
root down: every vertex ``b`` of the new tree is split by a draw from
``p_b`` started at the root partition of the old tree restricted to ``b``,
with draws equal to the one-block partition rejected. The transition
probability is the product over internal vertices of the conditioned
kernel values (:func:`ab_prob`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._random import UniformStream
from .combinatorics import (
    FragmentationTree, SetPartition, enumerate_trees, one_block, restrict,
    restricted_root_partition)
from .cp_kernel import PartitionKernelFamily, StateSpaceTooLarge, StochasticMatrix, cp_family
from .drivers import KeyedDrivers, SequentialDrivers
from .paintbox import MixtureMeasure

__all__ = [
    "ABKernel",
    "CTChainConfig",
    "DegenerateKernelError",
    "RejectionLimitError",
    "cp_ab_kernel",
    "ab_prob",
    "ab_prob_recursive",
    "ab_sample",
    "genealogical_map",
    "genealogical_sample",
    "ab_matrix",
    "ab_chain",
    "ct_simulate",
    "poisson_simulate",
]

MAX_REJECTIONS = 10**6
DEFAULT_MAX_N = 6


class DegenerateKernelError(ValueError):
    """Raised when ``p_b(B, 1_b) == 1``, so no split can ever be drawn."""


class RejectionLimitError(RuntimeError):
    """Too many consecutive one-block draws at a single vertex."""


@dataclass
class ABKernel:
    base: PartitionKernelFamily
    k: int | None = None

    def __post_init__(self):
        if self.k is None:
            self.k = self.base.k


def cp_ab_kernel(nu: MixtureMeasure, k: int) -> ABKernel:
    """The ancestral branching kernel driven by CP(nu) on ``[k]``."""
    return ABKernel(cp_family(nu, k), k)


@dataclass(frozen=True)
class CTChainConfig:
    lam: float
    horizon: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


def _factor(kernel: ABKernel, b: tuple, B: SetPartition, B2: SetPartition) -> float:
    fam = kernel.base
    stay = fam.evaluator(b, B, one_block(b))
    if stay >= 1.0:
        raise DegenerateKernelError("p_b(., 1_b) = 1 on b=%r from %r" % (b, B))
    return fam.evaluator(b, B, B2) / (1.0 - stay)


def ab_prob(T: FragmentationTree, T2: FragmentationTree, kernel: ABKernel) -> float:
    """Probability of moving from `T` to `T2`: the product over internal
    vertices ``b`` of `T2` of ``p_b(B, B2) / (1 - p_b(B, 1_b))`` with ``B``
    the root partition of ``T|b`` and ``B2`` the children of ``b``."""
    if T.ground != T2.ground:
        raise ValueError("trees live on different ground sets")
    p = 1.0
    for b in T2.internal_vertices():
        B = restricted_root_partition(T, b)
        B2 = SetPartition._trusted(T2.children(b), b)
        p *= _factor(kernel, b, B, B2)
        if p == 0.0:
            return 0.0
    return p


def ab_prob_recursive(T: FragmentationTree, T2: FragmentationTree, kernel: ABKernel) -> float:
    """Same value as :func:`ab_prob`, computed as the root factor times the
    transition probabilities of the subtrees below the root blocks."""
    if T.ground != T2.ground:
        raise ValueError("trees live on different ground sets")
    g = T.ground
    if len(g) == 1:
        return 1.0
    B = restricted_root_partition(T, g)
    B2 = SetPartition._trusted(T2.children(g), g)
    p = _factor(kernel, g, B, B2)
    for b in B2.blocks:
        if p == 0.0:
            break
        if len(b) > 1:
            p *= ab_prob_recursive(restrict(T, b), restrict(T2, b), kernel)
    return p


def ab_sample(T: FragmentationTree, kernel: ABKernel, rng: np.random.Generator,
              max_rejections: int = MAX_REJECTIONS) -> FragmentationTree:
    """Draw a tree from the ancestral branching kernel started at `T`.

    Frontier blocks are processed least element first; one-block draws are
    rejected and redrawn.
    """
    if not isinstance(rng, UniformStream):
        rng = UniformStream(rng, chunk=256)
    if kernel.base.splitter is not None:
        return _ab_sample_raw(T, kernel.base.splitter, rng, max_rejections)
    sampler = kernel.base.sampler
    if sampler is None:
        raise ValueError("the kernel family has no sampler")
    gen = rng.rng
    vertices = [(x,) for x in T.ground]
    frontier = [T.ground]
    while frontier:
        b = frontier.pop()
        if len(b) == 1:
            continue
        vertices.append(b)
        B = restricted_root_partition(T, b)
        for _ in range(max_rejections):
            pi = sampler(b, B, gen)
            if len(pi.blocks) > 1:
                break
        else:
            raise RejectionLimitError(
                "%d consecutive one-block draws on %r" % (max_rejections, b))
        frontier.extend(reversed(pi.blocks))
    return FragmentationTree._trusted(vertices)


def _ab_sample_raw(T, split, stream, max_rejections):
    vertices = [(x,) for x in T.ground]
    frontier = [T.ground]
    while frontier:
        b = frontier.pop()
        if len(b) == 1:
            continue
        vertices.append(b)
        rows = [blk for blk, _ in _split_with_owners(T, b)]
        tries = 0
        while True:
            cols = split(rows, stream)
            if len(cols) > 1:
                break
            tries += 1
            if tries >= max_rejections:
                raise RejectionLimitError(
                    "%d consecutive one-block draws on %r" % (max_rejections, b))
        for c in cols:
            c.sort()
            frontier.append(tuple(c))
    return FragmentationTree._trusted(vertices)


def _split_with_owners(T: FragmentationTree, A: tuple):
    """Blocks of the root partition of ``T|A`` with the old vertex each
    one comes from."""
    if A == T.ground:
        kids = T._children[0]
        return [(T.vertices[c], c) for c in kids]
    chains = T._chains
    first = chains[A[0]]
    d = len(first)
    for x in A[1:]:
        cx = chains[x]
        m = min(d, len(cx))
        j = 0
        while j < m and cx[j] == first[j]:
            j += 1
        d = j
    groups: dict = {}
    for x in A:
        groups.setdefault(chains[x][d], []).append(x)
    return [(tuple(g), c) for c, g in groups.items()]


def genealogical_map(T: FragmentationTree, drivers: Callable, k: int,
                     index_children_by: str = "order",
                     max_rejections: int = MAX_REJECTIONS,
                     record: dict | None = None) -> FragmentationTree:
    """Build the next tree from `T` with one driver per genealogical index.

    Parameters
    ----------
    drivers : callable
        ``drivers(u)`` returns the :class:`~abcp.drivers.Driver` for the
        index tuple ``u``; its colours must cover ``T.ground``.
    index_children_by : {"order", "column"}
        ``"order"``: the j-th child (by least element) of the vertex at
        ``u`` sits at ``u + (j,)`` and a one-block outcome moves the
        vertex to ``u + (1,)``. ``"column"``: the child collected in
        column ``c`` sits at ``u + (c + 1,)``, and rows are ordered by the
        size of the old vertex they come from (largest first, ties by
        least element). The second convention lines up with the mass
        chain of :mod:`abcp.mass_frag`. Both give the same law.
    record : dict, optional
        Filled with ``vertex -> index`` for every internal vertex of the
        new tree (the index at which it was finally split).
    """
    if index_children_by not in ("order", "column"):
        raise ValueError("index_children_by must be 'order' or 'column'")
    by_column = index_children_by == "column"
    pos = {x: i for i, x in enumerate(T.ground)}
    vertices = [(x,) for x in T.ground]
    stack = [(T.ground, ())]
    while stack:
        A, u = stack.pop()
        if len(A) == 1:
            continue
        vertices.append(A)
        # groups come out ordered by least element since A is sorted
        rows = _split_with_owners(T, A)
        if by_column:
            rows.sort(key=lambda r: (-len(T.vertices[r[1]]), T.vertices[r[1]][0]))
        if len(rows) > k:
            raise ValueError("old tree has degree above k=%d" % k)
        tries = 0
        while True:
            d = drivers(u)
            cols: list = [[] for _ in range(k)]
            for (blk, _), ci, pi in zip(rows, d.colours, d.perm):
                for x in blk:
                    cols[pi[ci[pos[x]]]].append(x)
            used = [c for c in range(k) if cols[c]]
            if len(used) > 1:
                break
            u = u + ((used[0] + 1) if by_column else 1,)
            tries += 1
            if tries >= max_rejections:
                raise RejectionLimitError(
                    "%d consecutive one-block draws on %r" % (max_rejections, A))
        if record is not None:
            record[A] = u
        if by_column:
            for c in used:
                stack.append((tuple(sorted(cols[c])), u + (c + 1,)))
        else:
            kids = sorted(tuple(sorted(cols[c])) for c in used)
            for j, blk in enumerate(kids, start=1):
                stack.append((blk, u + (j,)))
    return FragmentationTree._trusted(vertices)


def genealogical_sample(T: FragmentationTree, nu: MixtureMeasure, k: int,
                        rng: np.random.Generator,
                        max_rejections: int = MAX_REJECTIONS) -> FragmentationTree:
    """One CP(nu) ancestral branching step through the genealogical
    construction, drivers drawn afresh from `rng` for every index.

    `rng` may be a :class:`UniformStream`; pass one when drawing many trees
    so the buffer is not rebuilt per call.
    """
    n = len(T.ground)
    if n < 2:
        raise ValueError("need at least two labels")
    if not isinstance(rng, UniformStream):
        rng = UniformStream(rng, chunk=2 * n * k * (k + n + 1))
    drivers = SequentialDrivers(nu, k, n, rng)
    return genealogical_map(T, drivers, k, max_rejections=max_rejections)


def ab_matrix(n: int, kernel: ABKernel, max_n: int = DEFAULT_MAX_N) -> StochasticMatrix:
    """Transition matrix on trees of ``[n]`` with degree at most ``kernel.k``,
    states in :func:`~abcp.combinatorics.enumerate_trees` order."""
    if n > max_n:
        raise StateSpaceTooLarge("n=%d exceeds the cap %d" % (n, max_n))
    states = enumerate_trees(n, kernel.k)
    M = np.array([[ab_prob(a, b, kernel) for b in states] for a in states])
    return StochasticMatrix(states, M)


def ab_chain(T0: FragmentationTree, kernel: ABKernel, steps: int,
             rng: np.random.Generator) -> list:
    """Discrete-time path ``[T0, T1, ..., T_steps]``."""
    path = [T0]
    T = T0
    stream = UniformStream(rng)
    for _ in range(steps):
        T = ab_sample(T, kernel, stream)
        path.append(T)
    return path


def ct_simulate(T0: FragmentationTree, kernel: ABKernel, cfg: CTChainConfig,
                rng: np.random.Generator) -> list:
    """Continuous-time path with jump rates ``lam * Q(T, T')`` for
    ``T' != T``.

    Returns ``[(0, T0), (t1, T1), ...]``, one pair per jump, all times at
    most ``cfg.horizon``. Holding times are exponential with rate
    ``lam * (1 - Q(T, T))`` and jumps are drawn from ``Q(T, .)``
    conditioned to leave `T`.
    """
    path = [(0.0, T0)]
    t = 0.0
    T = T0
    stream = UniformStream(rng)
    while True:
        rate = cfg.lam * (1.0 - ab_prob(T, T, kernel))
        if rate <= 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t > cfg.horizon:
            break
        for _ in range(MAX_REJECTIONS):
            T2 = ab_sample(T, kernel, stream)
            if T2 != T:
                break
        else:
            raise RejectionLimitError("could not leave state %r" % (T,))
        T = T2
        path.append((t, T))
    return path


def poisson_simulate(T0: FragmentationTree, nu: MixtureMeasure, k: int, lam: float,
                     horizon: float, rng: np.random.Generator) -> list:
    """Poissonian construction of the continuous-time chain.

    Atom times form a rate-`lam` Poisson process on ``[0, horizon]``. At
    each atom a fresh family of drivers (one per genealogical index,
    generated on demand from the keyed stream of that atom) maps the
    current tree through :func:`genealogical_map`.

    Returns ``[(0, T0), (t1, T(t1)), ...]`` with one record per atom, so
    unchanged states are repeated when an atom does not move the tree.
    """
    CTChainConfig(lam, horizon)
    seed = int(rng.integers(2**63))
    n = len(T0.ground)
    path = [(0.0, T0)]
    t = 0.0
    T = T0
    atom = 0
    while True:
        t += rng.exponential(1.0 / lam)
        if t > horizon:
            break
        if n > 1:
            drivers = KeyedDrivers(nu, k, n, seed, tag="poisson", prefix=(atom,))
            T = genealogical_map(T, drivers, k)
        path.append((t, T))
        atom += 1
    return path
