"""Conservative mass fragmentations of 1 and the associated mass chain.

A mass fragmentation is stored as a map from genealogical indices (tuples
of positive integers, the root being ``()``) to masses. The children of
``u`` are the stored indices ``u + (j,)``.

The transition splits every new node by the column totals of a ``k x k``
matrix: row ``i`` carries the mass of the node that lies in the i-th old
block and spreads it over the columns according to ``s_i`` and the row
permutation. Two choices of the old blocks are offered:

``rule="coupled"``
    each new node remembers how much of it lies in which old vertex; a node
    lying inside a single old vertex is split along that vertex's children.
    This is the frequency-level image of the genealogical tree construction,
    so the mass of each new vertex of the tree matches the node here.
``rule="root"``
    every node is split along the children of the old root, as in the
    matrix display of the construction.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

from ._random import UniformStream
from .combinatorics import FragmentationTree
from .drivers import KeyedDrivers, SequentialDrivers
from .paintbox import MixtureMeasure

__all__ = [
    "MassFragmentation",
    "mass_step",
    "mass_chain",
    "mass_ct_simulate",
    "asymptotic_frequency",
    "mass_of_tree",
    "DEFAULT_DEPTH",
    "PRUNE",
]

DEFAULT_DEPTH = 4
PRUNE = 1e-12
CONSERVATION_TOL = 1e-9


class MassFragmentation:
    """Masses indexed by genealogical index, root ``()`` of mass 1.

    Parameters
    ----------
    masses : mapping of tuple -> float
        Must contain the root and be closed under taking parents.
    check : bool
        Validate conservation (children summing to the parent within
        ``1e-9`` whenever a node has children) and non-negativity.
    """

    __slots__ = ("masses", "_kids")

    def __init__(self, masses, check: bool = True):
        self.masses = {tuple(int(j) for j in u): float(m) for u, m in dict(masses).items()}
        kids: dict = {u: [] for u in self.masses}
        for u in self.masses:
            if u:
                if u[:-1] not in kids:
                    raise ValueError("index %r has no parent" % (u,))
                kids[u[:-1]].append(u)
        for v in kids.values():
            v.sort()
        self._kids = kids
        if check:
            self.validate()

    def validate(self, tol: float = CONSERVATION_TOL) -> None:
        m = self.masses
        if () not in m or abs(m[()] - 1.0) > tol:
            raise ValueError("root mass must be 1")
        for u, x in m.items():
            if x < 0:
                raise ValueError("negative mass at %r" % (u,))
            kids = self._kids[u]
            if kids and abs(sum(m[c] for c in kids) - x) > tol:
                raise ValueError("children of %r do not sum to its mass" % (u,))

    @classmethod
    def trivial(cls) -> "MassFragmentation":
        return cls({(): 1.0})

    @classmethod
    def from_nested(cls, d: dict) -> "MassFragmentation":
        """Inverse of :meth:`to_nested`; children get indices 1, 2, ..."""
        out = {}

        def walk(node, u):
            out[u] = float(node["mass"])
            for j, c in enumerate(node.get("children", []), start=1):
                walk(c, u + (j,))

        walk(d, ())
        return cls(out)

    def __getitem__(self, u) -> float:
        return self.masses[tuple(u)]

    def __contains__(self, u) -> bool:
        return tuple(u) in self.masses

    def __len__(self) -> int:
        return len(self.masses)

    def __eq__(self, other) -> bool:
        return isinstance(other, MassFragmentation) and self.masses == other.masses

    def __repr__(self) -> str:
        return "MassFragmentation(%r)" % self.to_nested()

    def children(self, u=()) -> list:
        return list(self._kids[tuple(u)])

    def child_masses(self, u=()) -> list:
        return [self.masses[c] for c in self._kids[tuple(u)]]

    @property
    def depth(self) -> int:
        return max(len(u) for u in self.masses)

    def max_violation(self) -> float:
        """Largest ``|sum(children) - parent|`` over nodes with children."""
        m = self.masses
        return max((abs(sum(m[c] for c in kids) - m[u])
                    for u, kids in self._kids.items() if kids), default=0.0)

    def ranked(self) -> "MassFragmentation":
        """Same fragmentation with the children of every node relabelled
        1, 2, ... in non-increasing order of mass (ties keep index order)."""
        out = {(): self.masses[()]}
        stack = [((), ())]
        while stack:
            old, new = stack.pop()
            kids = sorted(self._kids[old], key=lambda c: -self.masses[c])
            for j, c in enumerate(kids, start=1):
                out[new + (j,)] = self.masses[c]
                stack.append((c, new + (j,)))
        return MassFragmentation(out, check=False)

    def truncated(self, depth: int) -> "MassFragmentation":
        return MassFragmentation({u: m for u, m in self.masses.items() if len(u) <= depth},
                                 check=False)

    def to_nested(self) -> dict:
        def walk(u):
            node = {"mass": self.masses[u]}
            kids = self._kids[u]
            if kids:
                node["children"] = [walk(c) for c in kids]
            return node

        return walk(())


def asymptotic_frequency(A: Iterable[int], n: int) -> float:
    """``#(A ∩ [n]) / n``, the finite-n estimate of the frequency of `A`."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return sum(1 for x in set(A) if 1 <= x <= n) / n


def mass_of_tree(T: FragmentationTree, depth: int | None = None) -> MassFragmentation:
    """Vertex frequencies of `T`: each vertex ``v`` gets ``#v / n``.

    Children are ranked by size, ties by least element; singleton leaves
    are kept as nodes of mass ``1/n``. With `depth` the result is cut
    below that generation.
    """
    n = len(T.ground)
    out = {(): 1.0}
    stack = [(0, ())]
    while stack:
        i, u = stack.pop()
        if depth is not None and len(u) >= depth:
            continue
        kids = sorted(T._children[i], key=lambda c: (-len(T.vertices[c]), T.vertices[c][0]))
        for j, c in enumerate(kids, start=1):
            out[u + (j,)] = len(T.vertices[c]) / n
            stack.append((c, u + (j,)))
    return MassFragmentation(out, check=False)


def _rows(old: MassFragmentation, pieces: list, rule: str) -> list:
    """Rows ``(old index, mass)`` of the matrix splitting a node.

    Rows are sorted by the mass of the old vertex (largest first), ties by
    index, the order the genealogical tree map uses with column indexing.
    """
    if rule == "root":
        mass = sum(w for _, w in pieces)
        rows = [(c, mass * old.masses[c]) for c in old.children(())]
        if not rows:
            rows = [((), mass)]
    elif len(pieces) == 1:
        v, w = pieces[0]
        kids = old.children(v)
        mv = old.masses[v]
        if kids and mv > 0:
            rows = [(c, w * old.masses[c] / mv) for c in kids]
        else:
            rows = [(v, w)]
    else:
        rows = list(pieces)
    rows.sort(key=lambda r: (-old.masses[r[0]], r[0]))
    return rows


def mass_step(state: MassFragmentation, nu: MixtureMeasure, k: int,
              depth: int = DEFAULT_DEPTH, rng=None, drivers=None,
              rule: str = "coupled", indexing: str = "rank") -> MassFragmentation:
    """One transition of the mass chain, materialised to `depth` generations.

    Parameters
    ----------
    state : MassFragmentation
        Current state; nodes with at most `k` children.
    drivers : callable, optional
        ``drivers(u)`` gives the :class:`~abcp.drivers.Driver` (mass vectors
        and row permutations) for new index ``u``. Drawn afresh from `rng`
        when omitted.
    rule : {"coupled", "root"}
        Which old blocks form the matrix rows; see the module docstring.
    indexing : {"rank", "column"}
        ``"rank"``: the j-th largest column total becomes child ``j`` (ties
        by column). ``"column"``: the total of column ``c`` becomes child
        ``c + 1``, matching ``genealogical_map(..., index_children_by="column")``
        when both are fed the same drivers.

    Masses below ``1e-12`` are dropped; no split is ever rejected, so a
    node may have a single child carrying its whole mass.
    """
    if rule not in ("coupled", "root"):
        raise ValueError("rule must be 'coupled' or 'root'")
    if indexing not in ("rank", "column"):
        raise ValueError("indexing must be 'rank' or 'column'")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if drivers is None:
        if rng is None:
            raise ValueError("need rng or drivers")
        drivers = SequentialDrivers(nu, k, None, rng)
    out = {(): 1.0}
    queue = [((), [((), 1.0)])]
    while queue:
        u, pieces = queue.pop()
        if len(u) >= depth:
            continue
        rows = _rows(state, pieces, rule)
        if len(rows) > k:
            raise ValueError("state has a node with more than k=%d children" % k)
        d = drivers(u)
        cols: list = [[] for _ in range(k)]
        for i, (v, w) in enumerate(rows):
            for c, s in enumerate(d.masses[i]):
                x = w * s
                if x > PRUNE:
                    cols[d.perm[i][c]].append((v, x))
        totals = [(sum(x for _, x in col), c) for c, col in enumerate(cols)]
        if indexing == "rank":
            order = sorted((t for t in totals if t[0] > PRUNE), key=lambda t: (-t[0], t[1]))
            labelled = [(j, c) for j, (_, c) in enumerate(order, start=1)]
        else:
            labelled = [(c + 1, c) for t, c in totals if t > PRUNE]
        for j, c in labelled:
            w = u + (j,)
            out[w] = totals[c][0]
            merged: dict = {}
            for v, x in cols[c]:
                merged[v] = merged.get(v, 0.0) + x
            queue.append((w, list(merged.items())))
    return MassFragmentation(out, check=False)


def mass_chain(m0: MassFragmentation, nu: MixtureMeasure, k: int, steps: int,
               rng: np.random.Generator, depth: int = DEFAULT_DEPTH,
               rule: str = "coupled") -> list:
    """Path ``[m0, m1, ..., m_steps]`` of the discrete mass chain."""
    stream = UniformStream(rng)
    path = [m0]
    m = m0
    for _ in range(steps):
        m = mass_step(m, nu, k, depth, drivers=SequentialDrivers(nu, k, None, stream), rule=rule)
        path.append(m)
    return path


def mass_ct_simulate(m0: MassFragmentation, nu: MixtureMeasure, k: int, lam: float,
                     horizon: float, rng: np.random.Generator,
                     depth: int = DEFAULT_DEPTH, rule: str = "coupled") -> list:
    """Poissonian continuous-time mass chain on ``[0, horizon]``.

    Atoms of a rate-`lam` Poisson process each apply one :func:`mass_step`
    with drivers keyed by (atom, index). Returns ``[(0, m0), (t1, m1), ...]``
    with one record per atom.
    """
    if not lam > 0 or not horizon > 0:
        raise ValueError("lambda and horizon must be positive")
    seed = int(rng.integers(2**63))
    path = [(0.0, m0)]
    t = 0.0
    m = m0
    atom = 0
    while True:
        t += rng.exponential(1.0 / lam)
        if t > horizon:
            break
        drivers = KeyedDrivers(nu, k, None, seed, tag="mass-poisson", prefix=(atom,))
        m = mass_step(m, nu, k, depth, drivers=drivers, rule=rule)
        path.append((t, m))
        atom += 1
    return path
