"""Paintbox partitions driven by ranked mass partitions on the k-simplex.

Only conservative mass vectors (summing to one) are accepted. The mixing
measure over mass vectors is either a finite mixture of point masses or a
symmetric Dirichlet law, the two families for which partition
probabilities have exact closed forms.
"""
from __future__ import annotations

import bisect
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .combinatorics import SetPartition

__all__ = [
    "RankedMassPartition",
    "MixtureMeasure",
    "FiniteSupport",
    "SymmetricDirichlet",
    "LabelMeasure",
    "paintbox_prob",
    "paintbox_sample",
    "rho_nu_prob",
    "rho_nu_sample",
    "size_biased_labels",
    "nu_from_dict",
    "load_nu",
    "log_rising",
]

SUM_TOL = 1e-12


class RankedMassPartition:
    """Non-increasing non-negative masses summing to one."""

    __slots__ = ("masses",)

    def __init__(self, masses: Iterable[float]):
        m = tuple(float(x) for x in masses)
        if not m:
            raise ValueError("empty mass vector")
        if any(x < 0 for x in m):
            raise ValueError("masses must be non-negative")
        if any(a < b for a, b in zip(m, m[1:])):
            raise ValueError("masses must be non-increasing")
        if abs(sum(m) - 1.0) > SUM_TOL:
            raise ValueError(
                "masses sum to %r; dissipative mass partitions are not supported" % sum(m))
        self.masses = m

    @classmethod
    def ranked(cls, values: Iterable[float]) -> "RankedMassPartition":
        return cls(sorted((float(v) for v in values), reverse=True))

    def __len__(self) -> int:
        return len(self.masses)

    def __eq__(self, other) -> bool:
        return isinstance(other, RankedMassPartition) and self.masses == other.masses

    def __hash__(self) -> int:
        return hash(self.masses)

    def __repr__(self) -> str:
        return "RankedMassPartition(%s)" % list(self.masses)

    def padded(self, k: int) -> tuple:
        """The masses extended by zeros to length `k`."""
        m = self.masses
        if len(m) > k:
            if any(m[k:]):
                raise ValueError("mass vector has more than %d positive parts" % k)
            return m[:k]
        return m + (0.0,) * (k - len(m))

    @property
    def is_trivial(self) -> bool:
        return self.masses[0] == 1.0


def _ranked_prob(masses: Sequence[float], sizes: Sequence[int]) -> float:
    r = len(sizes)
    k = len(masses)
    if r > k:
        return 0.0
    total = 0.0
    for inj in itertools.permutations(range(k), r):
        p = 1.0
        for j, n in zip(inj, sizes):
            p *= masses[j] ** n
            if p == 0.0:
                break
        total += p
    return total


def paintbox_prob(s: RankedMassPartition, pi: SetPartition) -> float:
    """Probability that the paintbox based on `s` restricted to the ground
    set of `pi` equals `pi`.

    Sums, over injective colourings of the blocks, the product of
    ``s_j ** #block``. Depends on `pi` only through its block sizes.
    """
    if not isinstance(s, RankedMassPartition):
        s = RankedMassPartition(s)
    return _ranked_prob(s.masses, pi.sizes)


def _colour_partition(colours, labels) -> SetPartition:
    groups: dict = {}
    for x, c in zip(labels, colours):
        groups.setdefault(c, []).append(x)
    bl = tuple(sorted((tuple(g) for g in groups.values()), key=lambda b: b[0]))
    return SetPartition._trusted(bl, tuple(labels))


def _colours(masses, n: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(masses)
    c = np.searchsorted(cum, rng.random(n) * cum[-1], side="right")
    return np.minimum(c, len(masses) - 1)


def paintbox_sample(s: RankedMassPartition, n: int, rng: np.random.Generator,
                    labels: Sequence[int] | None = None) -> SetPartition:
    """Draw the paintbox partition of ``[n]`` (or of `labels`) based on `s`.

    Each label independently picks colour ``j`` with probability ``s_j``;
    labels sharing a colour share a block.
    """
    if not isinstance(s, RankedMassPartition):
        s = RankedMassPartition(s)
    if labels is None:
        if n < 1:
            raise ValueError("n must be >= 1")
        labels = tuple(range(1, n + 1))
    else:
        labels = tuple(sorted(labels))
    return _colour_partition(_colours(s.masses, len(labels), rng).tolist(), labels)


def log_rising(x: float, m: int) -> float:
    """``log(x (x+1) ... (x+m-1))``."""
    return math.lgamma(x + m) - math.lgamma(x)


class MixtureMeasure:
    """Probability measure on the ranked k-simplex.

    Subclasses implement :meth:`sample_masses` and :meth:`_prob_sizes`.
    """

    k: int

    def sample(self, rng: np.random.Generator) -> RankedMassPartition:
        return RankedMassPartition.ranked(self.sample_masses(rng, 1)[0])

    def sample_masses(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def draw_cumulative(self, stream) -> list:
        """Cumulative masses of one draw ``s ~ nu`` (length ``self.k``),
        using the :class:`~abcp._random.UniformStream` `stream`."""
        m = self.sample_masses(stream.rng, 1)[0]
        return np.cumsum(m).tolist()

    def draw_row(self, stream) -> tuple:
        """``(masses, cumulative masses)`` of one draw ``s ~ nu``. Callers
        must not modify the returned lists."""
        cum = self.draw_cumulative(stream)
        return [cum[0]] + [b - a for a, b in zip(cum, cum[1:])], cum

    def prob(self, pi: SetPartition) -> float:
        key = tuple(sorted(pi.sizes, reverse=True))
        cache = self.__dict__.setdefault("_cache", {})
        val = cache.get(key)
        if val is None:
            val = cache[key] = self._prob_sizes(key)
        return val

    def _prob_sizes(self, sizes: tuple) -> float:
        raise NotImplementedError

    @property
    def is_degenerate(self) -> bool:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class FiniteSupport(MixtureMeasure):
    """Finite mixture ``sum_i w_i delta_{s_i}``.

    Parameters
    ----------
    atoms : sequence of (mass vector, weight)
        Mass vectors are ranked on construction. Weights must be positive
        and sum to one.
    """

    def __init__(self, atoms):
        pts = []
        for s, w in atoms:
            if not isinstance(s, RankedMassPartition):
                s = RankedMassPartition.ranked(s)
            w = float(w)
            if w <= 0:
                raise ValueError("atom weights must be positive")
            pts.append((s, w))
        if not pts:
            raise ValueError("no atoms")
        if abs(sum(w for _, w in pts) - 1.0) > SUM_TOL:
            raise ValueError("atom weights must sum to 1")
        self.atoms = tuple(pts)
        self.k = max(len(s) for s, _ in pts)
        self._table = np.array([s.padded(self.k) for s, _ in pts])
        self._weights = np.array([w for _, w in pts])
        self._cum = np.cumsum(self._weights)
        self._cum_list = self._cum.tolist()
        self._table_cum = [np.cumsum(row).tolist() for row in self._table]
        self._rows = [(row.tolist(), c) for row, c in zip(self._table, self._table_cum)]

    @classmethod
    def point(cls, s) -> "FiniteSupport":
        return cls([(s, 1.0)])

    def __repr__(self) -> str:
        return "FiniteSupport(%s)" % [(list(s.masses), w) for s, w in self.atoms]

    def sample_masses(self, rng, size):
        if len(self.atoms) == 1:
            return np.broadcast_to(self._table[0], (size, self.k))
        idx = np.searchsorted(self._cum, rng.random(size) * self._cum[-1], side="right")
        return self._table[np.minimum(idx, len(self.atoms) - 1)]

    def draw_cumulative(self, stream):
        if len(self.atoms) == 1:
            return self._table_cum[0]
        i = bisect.bisect_right(self._cum_list, stream.next() * self._cum_list[-1])
        return self._table_cum[min(i, len(self.atoms) - 1)]

    def draw_row(self, stream):
        if len(self.atoms) == 1:
            return self._rows[0]
        i = bisect.bisect_right(self._cum_list, stream.next() * self._cum_list[-1])
        return self._rows[min(i, len(self.atoms) - 1)]

    def _prob_sizes(self, sizes):
        return sum(w * _ranked_prob(s.masses, sizes) for s, w in self.atoms)

    @property
    def is_degenerate(self) -> bool:
        return all(s.is_trivial for s, _ in self.atoms)

    def to_dict(self) -> dict:
        return {"type": "finite",
                "atoms": [{"s": list(s.masses), "w": w} for s, w in self.atoms]}


class SymmetricDirichlet(MixtureMeasure):
    """Ranked ``Dirichlet(beta, ..., beta)`` on the k-simplex."""

    def __init__(self, k: int, beta: float):
        if int(k) < 1:
            raise ValueError("k must be >= 1")
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.k = int(k)
        self.beta = float(beta)

    def __repr__(self) -> str:
        return "SymmetricDirichlet(k=%d, beta=%r)" % (self.k, self.beta)

    def sample_masses(self, rng, size):
        return np.sort(rng.dirichlet([self.beta] * self.k, size=size), axis=1)[:, ::-1]

    def _prob_sizes(self, sizes):
        r = len(sizes)
        k, b = self.k, self.beta
        if r > k:
            return 0.0
        lp = math.lgamma(k + 1) - math.lgamma(k - r + 1)
        lp += sum(log_rising(b, m) for m in sizes)
        lp -= log_rising(k * b, sum(sizes))
        return math.exp(lp)

    @property
    def is_degenerate(self) -> bool:
        return self.k == 1

    def to_dict(self) -> dict:
        return {"type": "dirichlet", "k": self.k, "beta": self.beta}


def rho_nu_prob(nu: MixtureMeasure, pi: SetPartition) -> float:
    """Probability of `pi` under the nu-mixture of paintboxes."""
    return nu.prob(pi)


def rho_nu_sample(nu: MixtureMeasure, n: int, rng: np.random.Generator,
                  labels: Sequence[int] | None = None) -> SetPartition:
    """Draw ``s ~ nu`` and then the paintbox partition based on `s`."""
    s = nu.sample_masses(rng, 1)[0]
    if labels is None:
        labels = tuple(range(1, n + 1))
    return _colour_partition(_colours(s, len(labels), rng).tolist(), tuple(sorted(labels)))


def nu_from_dict(d: dict) -> MixtureMeasure:
    """Build a mixing measure from its JSON config.

    ``{"type": "finite", "atoms": [{"s": [...], "w": w}, ...]}`` or
    ``{"type": "dirichlet", "k": K, "beta": B}``.
    """
    kind = d.get("type")
    if kind == "finite":
        return FiniteSupport([(a["s"], a["w"]) for a in d["atoms"]])
    if kind == "dirichlet":
        return SymmetricDirichlet(d["k"], d["beta"])
    raise ValueError("unknown measure type %r" % kind)


def load_nu(path) -> MixtureMeasure:
    with open(path) as fh:
        return nu_from_dict(json.load(fh))


@dataclass(frozen=True)
class LabelMeasure:
    """Probability measure on a finite set of labels."""

    atoms: tuple = field()

    def __init__(self, atoms):
        pts = tuple((lab, float(p)) for lab, p in atoms)
        labels = [lab for lab, _ in pts]
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be distinct")
        if any(p <= 0 for _, p in pts):
            raise ValueError("label probabilities must be positive")
        if abs(sum(p for _, p in pts) - 1.0) > 1e-9:
            raise ValueError("label probabilities must sum to 1")
        object.__setattr__(self, "atoms", pts)

    @classmethod
    def uniform(cls, labels) -> "LabelMeasure":
        labels = list(labels)
        return cls([(lab, 1.0 / len(labels)) for lab in labels])

    def __len__(self) -> int:
        return len(self.atoms)


def size_biased_labels(mu: LabelMeasure, count: int, rng: np.random.Generator) -> list:
    """Draw `count` distinct labels from `mu` without replacement, each
    draw proportional to the mass of the labels not yet drawn."""
    if count > len(mu.atoms):
        raise ValueError("cannot draw %d distinct labels from %d atoms"
                         % (count, len(mu.atoms)))
    labels = [lab for lab, _ in mu.atoms]
    probs = np.array([p for _, p in mu.atoms])
    out = []
    for u in rng.random(count):
        cum = np.cumsum(probs)
        i = int(np.searchsorted(cum, u * cum[-1], side="right"))
        i = min(i, len(probs) - 1)
        while probs[i] == 0:  # float edge at the top of the range
            i -= 1
        out.append(labels[i])
        probs[i] = 0.0
    return out
