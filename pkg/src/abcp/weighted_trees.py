"""Fragmentation trees with edge lengths.

The length of the edge above vertex ``b`` is stored at ``b``. A transition
first draws the new shape from the CP(nu) ancestral branching kernel and
then gives every internal vertex ``b`` of the new tree an exponential
length with rate ``theta * q_b``, where ``q_b = 1 - p_b(B, 1_b)`` and ``B``
is the root partition of the old tree restricted to ``b``
(``rate_from="previous"``) or the children of ``b`` in the new tree
(``rate_from="new"``). Only the first choice is consistent under
restriction. Leaves carry length 0 unless restriction has folded lengths
onto them.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from ._random import UniformStream
from .ab_kernel import ABKernel, ab_prob, ab_sample, cp_ab_kernel
from .combinatorics import (
    FragmentationTree, SetPartition, one_block, restrict, restricted_root_partition)
from .paintbox import MixtureMeasure

__all__ = [
    "WeightedTree",
    "weighted_sample",
    "weighted_chain",
    "weighted_log_density",
    "weighted_restrict",
    "to_newick",
    "from_newick",
    "RATE_CHOICES",
]

RATE_CHOICES = ("previous", "new")


@dataclass(frozen=True)
class WeightedTree:
    """A :class:`FragmentationTree` with a length for every vertex."""

    tree: FragmentationTree
    lengths: dict

    def __post_init__(self):
        L = {}
        for v in self.tree.vertices:
            x = float(self.lengths.get(v, 0.0))
            if not (math.isfinite(x) and x >= 0):
                raise ValueError("length of %r must be finite and >= 0" % (v,))
            L[v] = x
        extra = set(self.lengths) - set(L)
        if extra:
            raise ValueError("lengths given for non-vertices %r" % sorted(extra))
        object.__setattr__(self, "lengths", L)

    @classmethod
    def zero(cls, tree: FragmentationTree) -> "WeightedTree":
        return cls(tree, {})

    def length(self, v) -> float:
        """Length above `v`, 0 for sets that are not vertices."""
        return self.lengths.get(tuple(v), 0.0)

    def path_length(self, x: int) -> float:
        """Total length from the top of the root edge down to leaf `x`."""
        return sum(self.lengths[self.tree.vertices[i]] for i in self.tree._chains[x])

    def to_dict(self) -> dict:
        return {"vertices": [list(v) for v in self.tree.vertices],
                "lengths": [self.lengths[v] for v in self.tree.vertices]}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightedTree":
        T = FragmentationTree(d["vertices"])
        return cls(T, {tuple(sorted(v)): x for v, x in zip(d["vertices"], d["lengths"])})


def _kernel(nu, k, kernel):
    return kernel if kernel is not None else cp_ab_kernel(nu, k)


def _q(kernel: ABKernel, b: tuple, B: SetPartition) -> float:
    # exchangeable kernels: q_b(B, 1_b) only sees the block sizes of B
    cache = kernel.__dict__.setdefault("_q_cache", {})
    key = tuple(sorted(B.sizes))
    q = cache.get(key)
    if q is None:
        q = cache[key] = 1.0 - kernel.base.evaluator(b, B, one_block(b))
    return q


def _rate_partition(T, T2, b, rate_from):
    if rate_from == "previous":
        return restricted_root_partition(T, b)
    if rate_from == "new":
        return SetPartition._trusted(T2.children(b), b)
    raise ValueError("rate_from must be one of %r" % (RATE_CHOICES,))


def weighted_sample(Tbar: WeightedTree, nu: MixtureMeasure, k: int, theta: float,
                    rng: np.random.Generator, rate_from: str = "previous",
                    kernel: ABKernel | None = None) -> WeightedTree:
    """Draw the next weighted tree.

    The shape comes from :func:`~abcp.ab_kernel.ab_sample`; each internal
    vertex ``b`` then gets an independent ``Exp(theta * q_b)`` length.
    Raises ``ValueError`` when some ``q_b`` is 0.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    K = _kernel(nu, k, kernel)
    T = Tbar.tree
    T2 = ab_sample(T, K, rng)
    lengths = {}
    internal = T2.internal_vertices()
    gen = rng.rng if isinstance(rng, UniformStream) else rng
    draws = gen.standard_exponential(len(internal))
    for b, e in zip(internal, draws):
        q = _q(K, b, _rate_partition(T, T2, b, rate_from))
        if q <= 0.0:
            raise ValueError("q_b = 0 on %r; the mixing measure is degenerate" % (b,))
        lengths[b] = e / (theta * q)
    return WeightedTree(T2, lengths)


def weighted_chain(W0: WeightedTree, nu: MixtureMeasure, k: int, theta: float,
                   steps: int, rng: np.random.Generator,
                   rate_from: str = "previous") -> list:
    """Path ``[W0, W1, ..., W_steps]``."""
    K = cp_ab_kernel(nu, k)
    path = [W0]
    W = W0
    for _ in range(steps):
        W = weighted_sample(W, nu, k, theta, rng, rate_from, kernel=K)
        path.append(W)
    return path


def weighted_log_density(Tbar: WeightedTree, Tbar2: WeightedTree, nu: MixtureMeasure,
                         k: int, theta: float, rate_from: str = "previous",
                         kernel: ABKernel | None = None) -> float:
    """Log density of moving from `Tbar` to `Tbar2`.

    Shape probability times, for each internal vertex ``b`` of the new
    tree, the ``Exp(theta * q_b)`` density at its length. With
    ``rate_from="previous"`` this is the product of
    ``theta * p_b(B, B') * exp(-theta * t_b * q_b(B, 1_b))``. Returns
    ``-inf`` for a shape of probability zero.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    K = _kernel(nu, k, kernel)
    T, T2 = Tbar.tree, Tbar2.tree
    p = ab_prob(T, T2, K)
    if p == 0.0:
        return -math.inf
    out = math.log(p)
    for b in T2.internal_vertices():
        q = _q(K, b, _rate_partition(T, T2, b, rate_from))
        out += math.log(theta * q) - theta * q * Tbar2.lengths[b]
    return out


def weighted_restrict(Tbar: WeightedTree, S=None) -> WeightedTree:
    """Restriction to `S` (default: drop the largest label).

    A restricted vertex collects the lengths of every old vertex that
    collapses onto it, so root-to-leaf path lengths are preserved.
    """
    T = Tbar.tree
    if S is None:
        S = T.ground[:-1]
    S = tuple(sorted(S))
    if not S:
        raise ValueError("cannot restrict to the empty set")
    keep = set(S)
    lengths: dict = {}
    for v in T.vertices:
        w = tuple(x for x in v if x in keep)
        if w:
            lengths[w] = lengths.get(w, 0.0) + Tbar.lengths[v]
    return WeightedTree(restrict(T, S), lengths)


def _fmt(x: float) -> str:
    return "%.12g" % x


def to_newick(Tbar) -> str:
    """Newick string; leaves are labelled by their label, every vertex
    (root included) carries ``:length``. A bare tree gives no lengths."""
    if isinstance(Tbar, FragmentationTree):
        T, L = Tbar, None
    else:
        T, L = Tbar.tree, Tbar.lengths

    def walk(i):
        v = T.vertices[i]
        kids = T._children[i]
        s = str(v[0]) if not kids else "(" + ",".join(walk(c) for c in kids) + ")"
        if L is not None:
            s += ":" + _fmt(L[v])
        return s

    return walk(0) + ";"


_TOKEN = re.compile(r"\s*([(),:;]|[^(),:;\s]+)")


def from_newick(s: str) -> WeightedTree:
    """Parse the output of :func:`to_newick` (integer leaf labels; missing
    lengths read as 0)."""
    toks = _TOKEN.findall(s.strip())
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take(expect=None):
        nonlocal pos
        t = peek()
        if t is None or (expect is not None and t != expect):
            raise ValueError("malformed Newick near token %d: expected %r, got %r"
                             % (pos, expect, t))
        pos += 1
        return t

    vertices, lengths = [], {}

    def node():
        if peek() == "(":
            take("(")
            members = list(node())
            while peek() == ",":
                take(",")
                members += node()
            take(")")
            v = tuple(sorted(members))
        else:
            t = take()
            try:
                v = (int(t),)
            except ValueError:
                raise ValueError("leaf label %r is not an integer" % t) from None
        if peek() == ":":
            take(":")
            lengths[v] = lengths.get(v, 0.0) + float(take())
        vertices.append(v)
        return v

    node()
    take(";")
    if pos != len(toks):
        raise ValueError("trailing data after ';'")
    return WeightedTree(FragmentationTree(vertices), lengths)
