"""Compare both tree samplers with the exact kernel row and run a chain long
enough to see its occupation law settle on the stationary one.

Run: python3 demos/sampler_vs_exact.py [draws]
"""
import sys

import numpy as np

from abcp.ab_kernel import ab_chain, ab_matrix, ab_sample, cp_ab_kernel, genealogical_sample
from abcp.analysis import empirical_law, stationary, tv_distance
from abcp.paintbox import FiniteSupport
from abcp.weighted_trees import to_newick

draws = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
nu = FiniteSupport([((0.7, 0.3), 0.4), ((0.5, 0.5), 0.6)])
K = cp_ab_kernel(nu, 2)
M = ab_matrix(4, K)
rng = np.random.default_rng(1)

T = M.states[0]
print("start tree", to_newick(T))
exact = M.row(T)
a = empirical_law([ab_sample(T, K, rng) for _ in range(draws)], M.states)
g = empirical_law([genealogical_sample(T, nu, 2, rng) for _ in range(draws)], M.states)
print("%-22s %8s %8s %8s" % ("target", "exact", "ab", "geneal."))
for s, p, x, y in zip(M.states, exact, a, g):
    print("%-22s %8.4f %8.4f %8.4f" % (to_newick(s), p, x, y))
print("TV ab %.4f, genealogical %.4f" % (tv_distance(a, exact), tv_distance(g, exact)))

rho = stationary(M)
path = ab_chain(T, K, draws, rng)
print("chain occupation vs stationary law, TV %.4f"
      % tv_distance(empirical_law(path[1:], M.states), rho))
