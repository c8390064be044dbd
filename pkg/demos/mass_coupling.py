"""Drive a tree on [n] and its mass fragmentation with the same randomness
and watch block frequencies track the masses.

Run: python3 demos/mass_coupling.py [n]
"""
import sys

from abcp.ab_kernel import genealogical_map
from abcp.combinatorics import FragmentationTree
from abcp.drivers import KeyedDrivers
from abcp.mass_frag import mass_of_tree, mass_step
from abcp.paintbox import SymmetricDirichlet


def halving_tree(n):
    acc = []

    def rec(lo, hi):
        acc.append(tuple(range(lo, hi + 1)))
        if hi > lo:
            mid = (lo + hi) // 2
            rec(lo, mid)
            rec(mid + 1, hi)
    rec(1, n)
    return FragmentationTree(acc)


n = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
nu, k = SymmetricDirichlet(3, 1.0), 3
T0 = halving_tree(n)
D = KeyedDrivers(nu, k, n, seed=2024)
where = {}
genealogical_map(T0, D, k, index_children_by="column", record=where)
m1 = mass_step(mass_of_tree(T0, depth=6), nu, k, depth=3, drivers=D, indexing="column")

print("%-8s %10s %10s" % ("index", "|A|/n", "mass"))
for A, u in sorted(where.items(), key=lambda kv: kv[1]):
    if 1 <= len(u) <= 2 and u in m1:
        print("%-8s %10.4f %10.4f" % (u, len(A) / n, m1[u]))
