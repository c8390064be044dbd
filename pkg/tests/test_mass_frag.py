import numpy as np
import pytest
from scipy import stats

from abcp.ab_kernel import genealogical_map
from abcp.combinatorics import FragmentationTree
from abcp.drivers import Driver, KeyedDrivers
from abcp.mass_frag import (
    MassFragmentation, asymptotic_frequency, mass_chain, mass_ct_simulate, mass_of_tree,
    mass_step)
from abcp.paintbox import FiniteSupport, SymmetricDirichlet

HALF = FiniteSupport.point((0.5, 0.5))


def two_children(a, b):
    return MassFragmentation({(): 1.0, (1,): a, (2,): b})


def test_mass_step_examples():
    d = Driver([[0.5, 0.5], [0.5, 0.5]], [[0, 1], [0, 1]], None)
    m = mass_step(two_children(0.6, 0.4), HALF, 2, depth=1, drivers=lambda u: d)
    assert np.allclose(m.child_masses(), [0.5, 0.5], atol=1e-15)

    d = Driver([[1.0, 0.0], [1.0, 0.0]], [[0, 1], [1, 0]], None)
    m = mass_step(two_children(0.5, 0.5), FiniteSupport.point((1, 0)), 2, depth=1,
                  drivers=lambda u: d)
    assert np.allclose(m.child_masses(), [0.5, 0.5], atol=1e-15)


def test_mass_step_ranks_children():
    d = Driver([[0.7, 0.3], [0.5, 0.5]], [[1, 0], [0, 1]], None)
    m = mass_step(two_children(0.6, 0.4), HALF, 2, depth=1, drivers=lambda u: d)
    # column 0 gets .6*.3 + .4*.5 = .38, column 1 gets .6*.7 + .4*.5 = .62
    assert np.allclose(m.child_masses(), [0.62, 0.38], atol=1e-15)
    mc = mass_step(two_children(0.6, 0.4), HALF, 2, depth=1, drivers=lambda u: d,
                   indexing="column")
    assert np.allclose(mc.child_masses(), [0.38, 0.62], atol=1e-15)


def test_mass_step_errors():
    m = MassFragmentation.trivial()
    with pytest.raises(ValueError):
        mass_step(m, HALF, 2, rule="leaf", rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        mass_step(m, HALF, 2, indexing="size", rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        mass_step(m, HALF, 2, depth=0, rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        mass_step(m, HALF, 2)
    three = MassFragmentation({(): 1.0, (1,): 0.5, (2,): 0.3, (3,): 0.2})
    with pytest.raises(ValueError):
        mass_step(three, HALF, 2, rng=np.random.default_rng(0))


def test_asymptotic_frequency_examples():
    assert asymptotic_frequency(range(2, 1001, 2), 1000) == 0.5
    assert asymptotic_frequency(range(1, 51), 50) == 1.0
    assert asymptotic_frequency([7], 1000) == 0.001
    with pytest.raises(ValueError):
        asymptotic_frequency([1], 0)


def test_mass_of_tree_examples():
    star = FragmentationTree([[1, 2, 3, 4], [1], [2], [3], [4]])
    assert mass_of_tree(star).child_masses() == [0.25] * 4
    cat = FragmentationTree([[1, 2, 3, 4], [1, 2, 3], [1, 2], [1], [2], [3], [4]])
    m = mass_of_tree(cat)
    assert m.child_masses() == [0.75, 0.25]
    assert np.allclose(m.child_masses((1,)), [2 / 3 * 0.75, 1 / 3 * 0.75])
    assert m.max_violation() < 1e-15
    assert mass_of_tree(cat, depth=1).depth == 1


def test_validation():
    with pytest.raises(ValueError):
        MassFragmentation({(): 0.9})
    with pytest.raises(ValueError):
        two_children(0.6, 0.3)
    with pytest.raises(ValueError):
        MassFragmentation({(): 1.0, (1, 1): 1.0})
    with pytest.raises(ValueError):
        two_children(1.2, -0.2)


def test_nested_roundtrip_and_ranking():
    m = MassFragmentation({(): 1.0, (1,): 0.3, (2,): 0.7, (2, 1): 0.2, (2, 2): 0.5})
    assert MassFragmentation.from_nested(m.to_nested()) == m
    r = m.ranked()
    assert r.child_masses() == [0.7, 0.3]
    assert r.child_masses((1,)) == [0.5, 0.2]
    assert m.truncated(1) == two_children(0.3, 0.7)
    assert len(m) == 5 and (2, 2) in m and m[(2, 1)] == 0.2


@pytest.mark.parametrize("rule", ["coupled", "root"])
def test_chain_conserves_mass(rule):
    nu = SymmetricDirichlet(3, 0.8)
    path = mass_chain(MassFragmentation.trivial(), nu, 3, 300, np.random.default_rng(1),
                      depth=3, rule=rule)
    for m in path[1:]:
        assert m.max_violation() <= 1e-9
        assert abs(m[()] - 1) < 1e-12
        for u in m.masses:
            kids = m.child_masses(u)
            assert len(kids) <= 3
            assert all(a >= b for a, b in zip(kids, kids[1:]))


def test_chain_determinism():
    a = mass_chain(MassFragmentation.trivial(), HALF, 2, 20, np.random.default_rng(5))
    b = mass_chain(MassFragmentation.trivial(), HALF, 2, 20, np.random.default_rng(5))
    assert a == b


def test_ct_constant_without_atoms():
    m0 = two_children(0.5, 0.5)
    path = mass_ct_simulate(m0, HALF, 2, 1.0, 1e-9, np.random.default_rng(0))
    assert path == [(0.0, m0)]
    with pytest.raises(ValueError):
        mass_ct_simulate(m0, HALF, 2, 0.0, 1.0, np.random.default_rng(0))


def test_ct_atom_counts_poisson():
    rng = np.random.default_rng(2)
    counts = [len(mass_ct_simulate(MassFragmentation.trivial(), HALF, 2, 2.0, 5.0, rng,
                                   depth=1)) - 1 for _ in range(200)]
    assert abs(np.mean(counts) - 10.0) < 3 * np.sqrt(10.0 / 200)


def test_ct_one_step_law_matches_mass_step():
    nu = SymmetricDirichlet(2, 1.0)
    m0 = two_children(0.6, 0.4)
    rng = np.random.default_rng(3)
    ct = []
    while len(ct) < 10000:
        path = mass_ct_simulate(m0, nu, 2, 1.0, 1.0, rng, depth=1)
        if len(path) > 1:
            ct.append(path[1][1].child_masses()[0])
    step = [mass_step(m0, nu, 2, depth=1, rng=rng).child_masses()[0] for _ in range(10000)]
    assert stats.ks_2samp(ct, step).pvalue > 0.01


def _halving_tree(n):
    def rec(lo, hi, acc):
        acc.append(tuple(range(lo, hi + 1)))
        if hi > lo:
            mid = (lo + hi) // 2
            rec(lo, mid, acc)
            rec(mid + 1, hi, acc)
        return acc
    return FragmentationTree(rec(1, n, []))


@pytest.mark.parametrize("nu,k", [(HALF, 2), (SymmetricDirichlet(3, 1.0), 3)])
def test_coupled_with_tree(nu, k):
    n = 600
    T0 = _halving_tree(n)
    D = KeyedDrivers(nu, k, n, seed=11)
    rec = {}
    T1 = genealogical_map(T0, D, k, index_children_by="column", record=rec)
    m1 = mass_step(mass_of_tree(T0, depth=5), nu, k, depth=3, drivers=D, indexing="column")
    errs = [abs(len(A) / n - m1[u]) for A, u in rec.items() if len(u) <= 2 and u in m1]
    assert errs and max(errs) < 0.08
