"""Exact CP and AB transition matrices at n = 3, their stationary laws, and
the invariant suites.

Run: python3 demos/kernels_at_n3.py
"""
import numpy as np

from abcp.ab_kernel import ab_matrix, cp_ab_kernel
from abcp.analysis import property_report, stationary
from abcp.cp_kernel import cp_matrix
from abcp.paintbox import FiniteSupport, SymmetricDirichlet
from abcp.weighted_trees import to_newick

np.set_printoptions(precision=4, suppress=True)

for name, nu in [("point mass at (1/2, 1/2)", FiniteSupport.point((0.5, 0.5))),
                 ("Dirichlet(2, 1)", SymmetricDirichlet(2, 1.0))]:
    print("==", name)
    P = cp_matrix(3, 2, nu)
    print("partition kernel, states", [B.to_list() for B in P.states])
    print(P.entries)
    Q = ab_matrix(3, cp_ab_kernel(nu, 2))
    print("tree kernel, states", [to_newick(T) for T in Q.states])
    print(Q.entries)
    print("stationary law on trees:", stationary(Q))
    for suite in ("row_sums", "exchangeability", "recursion_equiv", "stationarity"):
        print("  " + property_report(suite, 3, 2, nu).to_text())
    print()
