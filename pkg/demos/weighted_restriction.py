"""Sample weighted trees on [n+1], restrict to [n], and compare the root edge
length with its exponential law.

Run: python3 demos/weighted_restriction.py [draws]
"""
import sys

import numpy as np

from abcp.combinatorics import enumerate_trees, one_block, restricted_root_partition
from abcp.cp_kernel import cp_prob
from abcp.paintbox import SymmetricDirichlet
from abcp.weighted_trees import WeightedTree, to_newick, weighted_restrict, weighted_sample

draws = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
nu, theta, n = SymmetricDirichlet(2, 1.0), 1.0, 3
T = enumerate_trees(n + 1, 2)[-1]
S = tuple(range(1, n + 1))
q = 1 - cp_prob(restricted_root_partition(T, S), one_block(S), nu, 2)
rng = np.random.default_rng(3)
W0 = WeightedTree.zero(T)
x = np.array([weighted_restrict(weighted_sample(W0, nu, 2, theta, rng), S).lengths[S]
              for _ in range(draws)])
print("start", to_newick(T))
print("rate theta*q = %.4f" % (theta * q))
print("mean %.4f (expected %.4f), variance %.4f (expected %.4f)"
      % (x.mean(), 1 / (theta * q), x.var(), 1 / (theta * q) ** 2))
print("one sample:", to_newick(weighted_sample(W0, nu, 2, theta, rng)))
