import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from abcp.combinatorics import (
    FragmentationTree, GenealogicalIndex, SetPartition, apply_injection, bell_number,
    canonical_partition, enumerate_partitions, enumerate_trees, fiber, one_block,
    restrict, restricted_root_partition, root_partition, split_last, tree_distance)

import oracles


def T(*vs):
    return FragmentationTree(vs)


CATERPILLAR3 = T([1, 2, 3], [1, 2], [1], [2], [3])


def test_partition_canonical_form():
    assert SetPartition([[3], [1, 2]]).to_list() == [[1, 2], [3]]
    assert SetPartition([[1]]).to_list() == [[1]]
    assert SetPartition([[3, 1], [2]]).blocks == ((1, 3), (2,))


def test_partition_overlap_rejected():
    with pytest.raises(ValueError):
        SetPartition([[1, 2], [2, 3]])
    with pytest.raises(ValueError):
        SetPartition([[1], []])


def test_tree_invariants_rejected():
    with pytest.raises(ValueError):
        T([1, 2, 3], [1, 2], [2, 3], [1], [2], [3])      # not laminar
    with pytest.raises(ValueError):
        T([1, 2, 3], [1, 2], [1], [2])                    # 3 missing
    with pytest.raises(ValueError):
        T([1, 2], [1])                                    # unary root


def test_restrict_examples():
    assert restrict(SetPartition([[1, 3], [2]]), [1, 2]).to_list() == [[1], [2]]
    assert restrict(CATERPILLAR3, [1, 3]) == T([1, 3], [1], [3])
    B = SetPartition([[1, 2], [3]])
    assert restrict(B, B.ground) == B
    assert restrict(CATERPILLAR3, (1, 2, 3)) == CATERPILLAR3


def test_apply_injection_examples():
    B = SetPartition([[1, 2], [3]])
    assert apply_injection(B, {1: 1, 2: 2, 3: 3}) == B
    assert apply_injection(B, {1: 3, 2: 2, 3: 1}).to_list() == [[1], [2, 3]]
    U = apply_injection(T([1, 2], [1], [2]), {1: 5, 2: 7})
    assert U == T([5, 7], [5], [7])
    assert U.ground == (5, 7)


def test_apply_injection_rejects_collisions():
    with pytest.raises(ValueError):
        apply_injection(SetPartition([[1], [2]]), {1: 4, 2: 4})


def test_enumerate_partitions_examples():
    assert len(enumerate_partitions(3)) == 5
    twos = enumerate_partitions(3, 2)
    assert len(twos) == 4
    assert SetPartition([[1], [2], [3]]) not in twos
    assert len(enumerate_partitions(1, 3)) == 1


@pytest.mark.parametrize("n", range(1, 7))
def test_partition_counts_match_bruteforce(n):
    got = {p.blocks for p in enumerate_partitions(n)}
    want = {oracles.canon(p) for p in oracles.set_partitions(range(1, n + 1))}
    assert got == want
    assert len(got) == bell_number(n)


@pytest.mark.parametrize("n,k", [(4, 2), (5, 2), (5, 3)])
def test_partition_block_bound(n, k):
    want = [p for p in oracles.set_partitions(range(1, n + 1)) if len(p) <= k]
    assert len(enumerate_partitions(n, k)) == len(want)


def test_enumerate_trees_examples():
    assert len(enumerate_trees(2, 2)) == 1
    assert len(enumerate_trees(2, 5)) == 1
    assert len(enumerate_trees(3, 2)) == 3
    assert len(enumerate_trees(3, 3)) == 4
    assert len(enumerate_trees(1)) == 1


@pytest.mark.parametrize("n,k", [(3, None), (4, None), (4, 2), (4, 3)])
def test_tree_sets_match_laminar_bruteforce(n, k):
    got = {frozenset(t.vertices) for t in enumerate_trees(n, k)}
    want = set(oracles.laminar_trees(range(1, n + 1), k))
    assert got == want


def test_tree_counts_known_sequence():
    # rooted trees with labelled leaves, no unary vertices: 1, 1, 4, 26, 236
    assert [len(enumerate_trees(n)) for n in range(1, 6)] == [1, 1, 4, 26, 236]
    # binary ones: (2n-3)!!
    assert [len(enumerate_trees(n, 2)) for n in range(2, 7)] == [1, 3, 15, 105, 945]


def test_fiber_examples():
    fib = fiber(SetPartition([[1]]))
    assert sorted(p.to_list() for p in fib) == [[[1], [2]], [[1, 2]]]
    t2 = enumerate_trees(2)[0]
    assert len(fiber(t2)) == 4
    assert len(fiber(t2, 2)) == 3


@pytest.mark.parametrize("n,k", [(3, None), (3, 2), (4, 2), (4, 3)])
def test_fibers_partition_the_next_level(n, k):
    up = enumerate_trees(n + 1, k)
    seen = []
    for t in enumerate_trees(n, k):
        f = fiber(t, k)
        assert all(restrict(u, range(1, n + 1)) == t for u in f)
        seen += f
    assert sorted(map(repr, seen)) == sorted(map(repr, up))


def test_root_partition_examples():
    assert root_partition(T([1, 2, 3], [1], [2], [3])).to_list() == [[1], [2], [3]]
    assert root_partition(CATERPILLAR3).to_list() == [[1, 2], [3]]
    assert root_partition(T([1, 2], [1], [2])).to_list() == [[1], [2]]


def test_restricted_root_partition():
    assert restricted_root_partition(CATERPILLAR3, (1, 2)).to_list() == [[1], [2]]
    assert restricted_root_partition(CATERPILLAR3, (1, 3)).to_list() == [[1], [3]]
    assert restricted_root_partition(CATERPILLAR3, (1, 2, 3)).to_list() == [[1, 2], [3]]


def test_distance_examples():
    a = CATERPILLAR3
    b = T([1, 2, 3], [1, 3], [1], [2], [3])
    assert tree_distance(a, a) == 0
    assert tree_distance(a, b) == Fraction(1, 2)
    assert tree_distance(b, a) == Fraction(1, 2)


@pytest.mark.parametrize("n", [3, 4])
def test_distance_matches_definition(n):
    trees = enumerate_trees(n)
    allowed = {Fraction(0)} | {Fraction(1, m) for m in range(1, n)}
    for a, b in itertools.product(trees, repeat=2):
        d = tree_distance(a, b)
        assert d == oracles.distance_bruteforce(a.vertices, b.vertices, n)
        assert d in allowed


def test_tree_navigation():
    t = CATERPILLAR3
    assert t.root == (1, 2, 3)
    assert t.children((1, 2, 3)) == ((1, 2), (3,))
    assert t.parent((1,)) == (1, 2)
    assert t.parent((1, 2, 3)) is None
    assert t.ancestors((2,)) == ((1, 2), (1, 2, 3))
    assert set(t.internal_vertices()) == {(1, 2, 3), (1, 2)}
    assert t.degree == 2
    assert t.depth == 2
    assert FragmentationTree(t.to_list()) == t


def test_genealogical_index():
    u = GenealogicalIndex()
    assert u.generation == 0
    v = u.child(2).child(1)
    assert v == (2, 1)
    assert v.parent == (2,)
    with pytest.raises(ValueError):
        GenealogicalIndex([0])


def test_helpers():
    assert one_block([2, 1]).to_list() == [[1, 2]]
    assert canonical_partition([[2], [1]]).to_list() == [[1], [2]]
    assert split_last([1, 2, 3]).to_list() == [[1, 2], [3]]


labels = st.lists(st.integers(1, 9), min_size=1, max_size=7, unique=True)


@st.composite
def partitions(draw):
    xs = draw(labels)
    cols = draw(st.lists(st.integers(0, 3), min_size=len(xs), max_size=len(xs)))
    groups = {}
    for x, c in zip(xs, cols):
        groups.setdefault(c, []).append(x)
    return SetPartition(groups.values())


@given(partitions(), st.randoms(use_true_random=False))
@settings(max_examples=100, deadline=None)
def test_partition_roundtrip_and_injection(B, r):
    assert SetPartition(B.to_list()) == B
    tgt = r.sample(range(1, 30), len(B.ground))
    m = dict(zip(B.ground, tgt))
    inv = {v: k for k, v in m.items()}
    assert apply_injection(apply_injection(B, m), inv) == B
    assert sorted(apply_injection(B, m).sizes) == sorted(B.sizes)


@given(st.integers(2, 5), st.data())
@settings(max_examples=60, deadline=None)
def test_restriction_composes(n, data):
    t = data.draw(st.sampled_from(enumerate_trees(n)))
    S = data.draw(st.lists(st.integers(1, n), min_size=1, unique=True))
    R = data.draw(st.lists(st.sampled_from(sorted(S)), min_size=1, unique=True))
    assert restrict(restrict(t, S), R) == restrict(t, R)
    assert FragmentationTree(restrict(t, S).to_list()) == restrict(t, S)
