"""Set partitions and fragmentation trees of finite label sets.

Both objects are immutable and hashable. Blocks of a partition and the
children of a tree vertex are always listed by least element, so two
objects compare equal exactly when they describe the same family of sets.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

Block = tuple  # sorted tuple of int labels

__all__ = [
    "SetPartition",
    "FragmentationTree",
    "GenealogicalIndex",
    "canonical_partition",
    "one_block",
    "split_last",
    "restrict",
    "apply_injection",
    "enumerate_partitions",
    "enumerate_trees",
    "fiber",
    "root_partition",
    "restricted_root_partition",
    "tree_distance",
    "bell_number",
]


def _ground(labels: Iterable[int]) -> tuple:
    g = tuple(sorted(set(int(x) for x in labels)))
    if not g:
        raise ValueError("ground set must be non-empty")
    return g


class SetPartition:
    """A partition of a finite set of integer labels.

    Parameters
    ----------
    blocks : iterable of iterables of int
        Disjoint non-empty blocks. Their union is the ground set.
    """

    __slots__ = ("blocks", "ground", "_hash")

    def __init__(self, blocks: Iterable[Iterable[int]]):
        bl = [tuple(sorted(set(int(x) for x in b))) for b in blocks]
        if not bl:
            raise ValueError("a partition needs at least one block")
        seen: set = set()
        total = 0
        for b in bl:
            if not b:
                raise ValueError("empty block")
            seen.update(b)
            total += len(b)
        if total != len(seen):
            raise ValueError("overlapping blocks")
        bl.sort(key=lambda b: b[0])
        self.blocks = tuple(bl)
        self.ground = tuple(sorted(seen))
        self._hash = hash(self.blocks)

    @classmethod
    def _trusted(cls, blocks: tuple, ground: tuple) -> "SetPartition":
        # blocks already canonical, disjoint and covering ground
        obj = cls.__new__(cls)
        obj.blocks = blocks
        obj.ground = ground
        obj._hash = hash(blocks)
        return obj

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __eq__(self, other) -> bool:
        return isinstance(other, SetPartition) and self.blocks == other.blocks

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return "SetPartition(%s)" % [list(b) for b in self.blocks]

    @property
    def sizes(self) -> tuple:
        return tuple(len(b) for b in self.blocks)

    @property
    def is_one_block(self) -> bool:
        return len(self.blocks) == 1

    def block_of(self) -> dict:
        """Map each label to the index of its block."""
        return {x: i for i, b in enumerate(self.blocks) for x in b}

    def to_list(self) -> list:
        return [list(b) for b in self.blocks]


def _vertex_key(v: tuple) -> tuple:
    return (-len(v), v[0])


class FragmentationTree:
    """A laminar family of subsets containing the ground set and all
    singletons, in which every non-singleton vertex is split by its
    children into at least two blocks.

    Parameters
    ----------
    vertices : iterable of iterables of int
        The vertex sets. Duplicates are ignored.
    """

    __slots__ = (
        "ground", "vertices", "_index", "_children", "_parent", "_hash",
        "_chains",
    )

    def __init__(self, vertices: Iterable[Iterable[int]]):
        vs = {tuple(sorted(set(int(x) for x in v))) for v in vertices}
        if () in vs:
            raise ValueError("empty vertex")
        if not vs:
            raise ValueError("a tree needs at least one vertex")
        ground = max(vs, key=len)
        gset = set(ground)
        for v in vs:
            if not gset.issuperset(v):
                raise ValueError("no vertex contains all labels (missing root)")
        for x in ground:
            if (x,) not in vs:
                raise ValueError("singleton {%d} missing" % x)
        self._build(vs, ground)

    @classmethod
    def _trusted(cls, vertices: Iterable[tuple]) -> "FragmentationTree":
        # index structures are filled in on first use (see __getattr__)
        order = tuple(sorted(set(vertices), key=_vertex_key))
        obj = cls.__new__(cls)
        obj.ground = order[0]
        obj.vertices = order
        obj._hash = hash(order)
        return obj

    def __getattr__(self, name):
        if name in ("_index", "_children", "_parent", "_chains"):
            self._build(set(self.vertices), self.vertices[0], check=False)
            return object.__getattribute__(self, name)
        raise AttributeError(name)

    def _build(self, vs: set, ground: tuple, check: bool = True) -> None:
        order = sorted(vs, key=_vertex_key)
        self.ground = ground
        self.vertices = tuple(order)
        self._index = {v: i for i, v in enumerate(order)}
        # chains[x]: indices of the vertices containing x, root first
        chains: dict = {x: [] for x in ground}
        for i, v in enumerate(order):
            for x in v:
                chains[x].append(i)
        parent = [-1] * len(order)
        children: list = [[] for _ in order]
        for i, v in enumerate(order):
            if i == 0:
                continue
            ch = chains[v[0]]
            pos = ch.index(i)
            if pos == 0:
                raise ValueError("vertex %r is not nested in the root" % (v,))
            p = ch[pos - 1]
            parent[i] = p
            children[p].append(i)
        if check:
            for i, v in enumerate(order):
                if len(v) == 1:
                    continue
                kids = children[i]
                covered = set()
                for c in kids:
                    cv = order[c]
                    if not covered.isdisjoint(cv):
                        raise ValueError("vertices are not laminar")
                    covered.update(cv)
                if covered != set(v) or len(kids) < 2:
                    raise ValueError(
                        "children of %r do not split it into >= 2 blocks" % (v,))
        for kids in children:
            kids.sort(key=lambda c: order[c][0])
        self._parent = parent
        self._children = [tuple(k) for k in children]
        self._chains = chains
        self._hash = hash(self.vertices)

    def __eq__(self, other) -> bool:
        return isinstance(other, FragmentationTree) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return self._hash

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v) -> bool:
        return tuple(sorted(v)) in self._index

    def __repr__(self) -> str:
        return "FragmentationTree(%s)" % [list(v) for v in self.vertices]

    @property
    def root(self) -> tuple:
        return self.ground

    def children(self, v: Sequence[int]) -> tuple:
        """Children of vertex `v`, ordered by least element."""
        i = self._index[tuple(v)]
        return tuple(self.vertices[c] for c in self._children[i])

    def parent(self, v: Sequence[int]):
        i = self._parent[self._index[tuple(v)]]
        return None if i < 0 else self.vertices[i]

    def ancestors(self, v: Sequence[int]) -> tuple:
        """Strict ancestors of `v`, nearest first."""
        out = []
        i = self._parent[self._index[tuple(v)]]
        while i >= 0:
            out.append(self.vertices[i])
            i = self._parent[i]
        return tuple(out)

    def internal_vertices(self) -> tuple:
        return tuple(v for v in self.vertices if len(v) > 1)

    @property
    def degree(self) -> int:
        """Fragmentation degree: the largest number of children."""
        return max((len(c) for c in self._children), default=0)

    @property
    def depth(self) -> int:
        return max(len(ch) for ch in self._chains.values()) - 1

    def to_list(self) -> list:
        return [list(v) for v in self.vertices]


class GenealogicalIndex(tuple):
    """Address of a vertex by child positions from the root; ``()`` is the
    root and ``u + (j,)`` its j-th child (positions start at 1)."""

    def __new__(cls, path: Iterable[int] = ()):
        p = tuple(int(x) for x in path)
        if any(x < 1 for x in p):
            raise ValueError("child positions start at 1")
        return super().__new__(cls, p)

    @property
    def parent(self) -> "GenealogicalIndex":
        if not self:
            raise ValueError("the root has no parent")
        return GenealogicalIndex(self[:-1])

    def child(self, j: int) -> "GenealogicalIndex":
        return GenealogicalIndex(self + (j,))

    @property
    def generation(self) -> int:
        return len(self)


def canonical_partition(blocks: Iterable[Iterable[int]]) -> SetPartition:
    """Build the canonical partition with the given blocks."""
    return SetPartition(blocks)


def one_block(ground: Iterable[int]) -> SetPartition:
    g = _ground(ground)
    return SetPartition._trusted((g,), g)


def split_last(ground: Iterable[int], x: int | None = None) -> SetPartition:
    """The partition ``{S, {x}}`` of ``S ∪ {x}``; `x` defaults to the
    largest label of `ground`."""
    g = _ground(ground)
    if x is None:
        x = g[-1]
    rest = [y for y in g if y != x]
    if not rest:
        raise ValueError("need at least two labels")
    return SetPartition([rest, [x]])


Obj = Union[SetPartition, FragmentationTree]


def _as_subset(obj: Obj, S: Iterable[int]) -> frozenset:
    s = frozenset(int(x) for x in S)
    if not s:
        raise ValueError("cannot restrict to the empty set")
    if not s.issubset(obj.ground):
        raise ValueError("restriction set is not a subset of the ground set")
    return s


def restrict(obj: Obj, S: Iterable[int]) -> Obj:
    """Restriction of a partition or tree to the label set `S`."""
    s = _as_subset(obj, S)
    if len(s) == len(obj.ground):
        return obj
    if isinstance(obj, SetPartition):
        bl = []
        for b in obj.blocks:
            r = tuple(x for x in b if x in s)
            if r:
                bl.append(r)
        return SetPartition._trusted(tuple(bl), tuple(sorted(s)))
    vs = set()
    for v in obj.vertices:
        r = tuple(x for x in v if x in s)
        if r:
            vs.add(r)
    return FragmentationTree._trusted(vs)


def apply_injection(obj: Obj, mapping: Union[Mapping[int, int], Callable[[int], int]]) -> Obj:
    """Relabel `obj` through an injective map defined on its ground set."""
    f = mapping.__getitem__ if isinstance(mapping, Mapping) else mapping
    try:
        img = {x: int(f(x)) for x in obj.ground}
    except (KeyError, IndexError) as exc:
        raise ValueError("map is not defined on the whole ground set") from exc
    if len(set(img.values())) != len(img):
        raise ValueError("map is not injective on the ground set")
    if isinstance(obj, SetPartition):
        return SetPartition([img[x] for x in b] for b in obj.blocks)
    return FragmentationTree._trusted(
        tuple(sorted(img[x] for x in v)) for v in obj.vertices)


def _rgs(n: int, k: int | None):
    # restricted growth strings a with a[0] = 0, a[i] <= max(a[:i]) + 1
    a = [0] * n

    def rec(i, m):
        if i == n:
            yield tuple(a)
            return
        top = m + 1 if k is None else min(m + 1, k - 1)
        for v in range(top + 1):
            a[i] = v
            yield from rec(i + 1, max(m, v))

    if n == 0:
        return
    yield from rec(1, 0)


def _partitions_of(labels: tuple, k: int | None):
    n = len(labels)
    for a in _rgs(n, k):
        nb = max(a) + 1
        bl = [[] for _ in range(nb)]
        for x, c in zip(labels, a):
            bl[c].append(x)
        yield SetPartition._trusted(tuple(tuple(b) for b in bl), labels)


def enumerate_partitions(n: int, k: int | None = None, labels: Sequence[int] | None = None) -> list:
    """All partitions of ``[n]`` (or of `labels`) with at most `k` blocks.

    Partitions are listed in lexicographic order of their restricted
    growth strings, so ``1_n`` comes first and the all-singletons
    partition last. ``k=None`` means no bound.
    """
    if labels is None:
        if n < 1:
            raise ValueError("n must be >= 1")
        labels = tuple(range(1, n + 1))
    else:
        labels = _ground(labels)
    if k is not None and k < 1:
        raise ValueError("k must be >= 1")
    return list(_partitions_of(tuple(labels), k))


def _trees_of(labels: tuple, k: int | None, memo: dict) -> list:
    key = labels
    if key in memo:
        return memo[key]
    if len(labels) == 1:
        out = [frozenset([labels])]
    else:
        out = []
        for pi in _partitions_of(labels, k):
            if len(pi.blocks) < 2:
                continue
            subs = [_trees_of(b, k, memo) for b in pi.blocks]
            for combo in itertools.product(*subs):
                vs = {labels}
                for part in combo:
                    vs |= part
                out.append(frozenset(vs))
    memo[key] = out
    return out


def enumerate_trees(n: int, k: int | None = None, labels: Sequence[int] | None = None) -> list:
    """All fragmentation trees of ``[n]`` with degree at most `k`.

    Ordered by root partition (in the order of :func:`enumerate_partitions`)
    and then, recursively, by the subtrees of the root blocks.
    """
    if labels is None:
        if n < 1:
            raise ValueError("n must be >= 1")
        labels = tuple(range(1, n + 1))
    else:
        labels = _ground(labels)
    if k is not None and k < 2 and len(labels) > 1:
        return []
    return [FragmentationTree._trusted(vs) for vs in _trees_of(tuple(labels), k, {})]


def bell_number(n: int) -> int:
    """Bell number via the Bell triangle."""
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[-1]


def fiber(obj: Obj, k: int | None = None) -> list:
    """All objects on ``ground ∪ {m+1}`` (m the largest label) with at most
    `k` blocks / degree at most `k` that restrict back to `obj`."""
    new = obj.ground[-1] + 1
    if isinstance(obj, SetPartition):
        out = []
        bl = obj.blocks
        ground = obj.ground + (new,)
        for i in range(len(bl)):
            nb = bl[:i] + (bl[i] + (new,),) + bl[i + 1:]
            out.append(SetPartition._trusted(nb, ground))
        if k is None or len(bl) < k:
            out.append(SetPartition._trusted(bl + ((new,),), ground))
        return out

    T = obj
    out = []
    verts = T.vertices
    anc_sets = {}
    for v in verts:
        anc_sets[v] = T.ancestors(v)
    for v in verts:
        grown = {a: a + (new,) for a in anc_sets[v]}
        base = [grown.get(w, w) for w in verts]
        # graft on the edge above v
        out.append(FragmentationTree._trusted(
            [w if w != v else v for w in base] + [v + (new,), (new,)]))
        # attach as an extra child of an internal vertex
        if len(v) > 1 and (k is None or len(T.children(v)) < k):
            out.append(FragmentationTree._trusted(
                [w if w != v else v + (new,) for w in base] + [(new,)]))
    if k is not None:
        out = [t for t in out if t.degree <= k]
    return out


def root_partition(T: FragmentationTree) -> SetPartition:
    """Partition of the ground set formed by the children of the root."""
    if len(T.ground) < 2:
        raise ValueError("a single-leaf tree has no root partition")
    return SetPartition._trusted(T.children(T.ground), T.ground)


def restricted_root_partition(T: FragmentationTree, S: Sequence[int]) -> SetPartition:
    """Root partition of ``T|S`` without building the restricted tree.

    `S` must hold at least two labels of ``T.ground``.
    """
    S = tuple(sorted(S))
    if len(S) < 2:
        raise ValueError("need at least two labels")
    chains = T._chains
    first = chains[S[0]]
    d = len(first)
    for x in S[1:]:
        cx = chains[x]
        m = min(d, len(cx))
        j = 0
        while j < m and cx[j] == first[j]:
            j += 1
        d = j
        if d == 1:
            break
    # first[d - 1] is the smallest vertex containing S; split by its children
    groups: dict = {}
    for x in S:
        groups.setdefault(chains[x][d], []).append(x)
    bl = sorted((tuple(g) for g in groups.values()), key=lambda b: b[0])
    return SetPartition._trusted(tuple(bl), S)


def tree_distance(T: FragmentationTree, U: FragmentationTree) -> Fraction:
    """``1 / max{m : T|[m] = U|[m]}``, and 0 when the trees are equal.

    Both trees must live on the same ground set; restrictions are taken
    to the ``m`` smallest labels.
    """
    if T.ground != U.ground:
        raise ValueError("trees live on different ground sets")
    if T == U:
        return Fraction(0)
    g = T.ground
    best = 1
    for m in range(2, len(g) + 1):
        if restrict(T, g[:m]) == restrict(U, g[:m]):
            best = m
        else:
            break
    return Fraction(1, best)
