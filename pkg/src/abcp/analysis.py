"""Exact checks on the finite kernels: stationary laws, invariance and
consistency reports, partition meets and alpha-permanents.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .ab_kernel import ABKernel, ab_matrix, ab_prob, ab_prob_recursive, cp_ab_kernel
from .combinatorics import (
    FragmentationTree, SetPartition, apply_injection, enumerate_partitions,
    enumerate_trees, fiber, restricted_root_partition)
from .cp_kernel import PartitionKernelFamily, StochasticMatrix, cp_family
from .paintbox import MixtureMeasure

__all__ = [
    "StochasticMatrix",
    "NotIrreducibleError",
    "PeriodicError",
    "stationary",
    "meet",
    "partition_matrix",
    "alpha_permanent",
    "ab2_alpha_prob",
    "ab2_comparison",
    "PropertyReport",
    "property_report",
    "SUITES",
    "tv_distance",
    "empirical_law",
    "jump_matrix",
    "partition_matrix_of_family",
]

MAX_PERMANENT_N = 10
POWER_TOL = 1e-12
POWER_MAX_ITER = 10**6
RESIDUAL_TOL = 1e-10


class NotIrreducibleError(ValueError):
    pass


class PeriodicError(ValueError):
    pass


def _period(P: np.ndarray) -> int:
    """Period of an irreducible chain from BFS levels: the gcd of
    ``level[i] + 1 - level[j]`` over edges ``i -> j``."""
    order, pred = breadth_first_order(P > 0, 0, directed=True, return_predecessors=True)
    level = np.zeros(len(P), dtype=int)
    for v in order[1:]:
        level[v] = level[pred[v]] + 1
    g = 0
    for i, j in zip(*np.nonzero(P > 0)):
        g = math.gcd(g, abs(int(level[i]) + 1 - int(level[j])))
        if g == 1:
            break
    return g


def stationary(M) -> np.ndarray:
    """Unique stationary law of an irreducible aperiodic stochastic matrix.

    Solves ``rho (M - I) = 0, sum(rho) = 1`` directly and falls back to
    power iteration when the residual ``||rho M - rho||_1`` exceeds 1e-10.

    Raises
    ------
    NotIrreducibleError, PeriodicError
        When the corresponding premise fails.
    """
    P = np.asarray(M.entries if isinstance(M, StochasticMatrix) else M, dtype=float)
    n = P.shape[0]
    ncomp, _ = connected_components(P > 0, directed=True, connection="strong")
    if ncomp != 1:
        raise NotIrreducibleError("matrix is not irreducible (%d communicating classes)" % ncomp)
    d = _period(P)
    if d != 1:
        raise PeriodicError("matrix is periodic with period %d" % d)
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        rho = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        rho = np.full(n, 1.0 / n)
    rho = np.clip(rho, 0.0, None)
    rho /= rho.sum()
    if np.abs(rho @ P - rho).sum() > RESIDUAL_TOL:
        for _ in range(POWER_MAX_ITER):
            nxt = rho @ P
            if np.abs(nxt - rho).sum() < POWER_TOL:
                rho = nxt
                break
            rho = nxt
        rho /= rho.sum()
    return rho


def meet(B: SetPartition, B2: SetPartition) -> SetPartition:
    """Coarsest common refinement: all non-empty intersections."""
    if B.ground != B2.ground:
        raise ValueError("partitions live on different ground sets")
    where = B2.block_of()
    groups: dict = {}
    for i, b in enumerate(B.blocks):
        for x in b:
            groups.setdefault((i, where[x]), []).append(x)
    bl = tuple(sorted((tuple(g) for g in groups.values()), key=lambda b: b[0]))
    return SetPartition._trusted(bl, B.ground)


def partition_matrix(B: SetPartition, convention: str = "comembership") -> np.ndarray:
    """0-1 matrix of a partition.

    ``"comembership"``: ``M[i, j] = 1`` iff labels ``i`` and ``j`` share a
    block. ``"incidence"``: rows are labels, columns are blocks, padded
    with zero columns to a square matrix.
    """
    n = len(B.ground)
    pos = {x: i for i, x in enumerate(B.ground)}
    M = np.zeros((n, n))
    if convention == "comembership":
        for b in B.blocks:
            idx = [pos[x] for x in b]
            M[np.ix_(idx, idx)] = 1.0
    elif convention == "incidence":
        for j, b in enumerate(B.blocks):
            for x in b:
                M[pos[x], j] = 1.0
    else:
        raise ValueError("unknown convention %r" % convention)
    return M


def _cycle_weights(A: np.ndarray) -> dict:
    """Total weight of the cyclic permutations of each non-empty subset."""
    n = len(A)
    out = {}
    for s in range(n):
        # paths from s through labels > s; h[(mask, j)] = weight ending at j
        h = {(1 << s, s): 1.0}
        out[1 << s] = A[s, s]
        for mask in range(1 << s, 1 << n):
            if not mask >> s & 1 or mask & ((1 << s) - 1):
                continue
            for j in range(s, n):
                w = h.get((mask, j))
                if not w:
                    continue
                if mask != 1 << s:
                    out[mask] = out.get(mask, 0.0) + w * A[j, s]
                for t in range(s + 1, n):
                    if not mask >> t & 1 and A[j, t] != 0:
                        key = (mask | 1 << t, t)
                        h[key] = h.get(key, 0.0) + w * A[j, t]
    return out


def alpha_permanent(A, alpha: float, max_n: int = MAX_PERMANENT_N) -> float:
    """``sum over permutations s of alpha**cycles(s) * prod_i A[i, s(i)]``.

    Summed over cycle decompositions: a permutation is a set partition of
    the rows with a cyclic order on each block. Cost ``O(3**n)``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("need a square matrix")
    n = len(A)
    if n > max_n:
        raise ValueError("n=%d exceeds the cap %d" % (n, max_n))
    if n == 0:
        return 1.0
    cyc = _cycle_weights(A)
    full = (1 << n) - 1
    f = {0: 1.0}
    for S in range(1, full + 1):
        low = S & -S
        rest = S ^ low
        total = 0.0
        sub = rest
        while True:
            blk = sub | low
            c = cyc.get(blk, 0.0)
            if c:
                total += alpha * c * f[S ^ blk]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        f[S] = total
    return f[full]


def ab2_alpha_prob(t: FragmentationTree, t2: FragmentationTree, alpha: float,
                   convention: str = "comembership") -> float:
    """Closed-form binary transition probability indexed by ``alpha``.

    Product over internal vertices ``b`` of `t2` of
    ``2 per_{alpha/2}(B ∧ B') / (per_alpha(B) - 2 per_{alpha/2}(B))`` with
    ``B`` the root partition of ``t|b`` and ``B'`` the children of ``b`` in
    `t2`, partitions turned into matrices by :func:`partition_matrix`.
    Raises ``ValueError`` when a denominator is not positive.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    for T in (t, t2):
        if T.degree > 2:
            raise ValueError("trees must be binary")
    p = 1.0
    for b in t2.internal_vertices():
        B = restricted_root_partition(t, b)
        B2 = SetPartition._trusted(t2.children(b), b)
        per_b = alpha_permanent(partition_matrix(B, convention), alpha)
        half_b = alpha_permanent(partition_matrix(B, convention), alpha / 2)
        den = per_b - 2.0 * half_b
        if not den > 0:
            raise ValueError("non-positive denominator %.6g at %r under the %s convention"
                             % (den, b, convention))
        p *= 2.0 * alpha_permanent(partition_matrix(meet(B, B2), convention), alpha / 2) / den
    return p


def ab2_comparison(n: int, alpha: float, conventions=("comembership", "incidence")) -> dict:
    """Compare :func:`ab2_alpha_prob` with the CP(Dirichlet(2, alpha/2))
    ancestral branching kernel on all binary trees of ``[n]``."""
    from .paintbox import SymmetricDirichlet

    K = cp_ab_kernel(SymmetricDirichlet(2, alpha / 2), 2)
    states = enumerate_trees(n, 2)
    out = {"n": n, "alpha": alpha, "conventions": {}}
    for conv in conventions:
        worst, err, pair = 0.0, None, None
        for a in states:
            for b in states:
                ref = ab_prob(a, b, K)
                try:
                    val = ab2_alpha_prob(a, b, alpha, conv)
                except ValueError as e:
                    err = str(e)
                    break
                diff = float(abs(val - ref))
                if diff > worst or pair is None:
                    worst, pair = diff, (a.to_list(), b.to_list(), float(val), float(ref))
            if err:
                break
        out["conventions"][conv] = {
            "evaluated": err is None,
            "error": err,
            "max_abs_diff": None if err else worst,
            "worst_pair": pair,
        }
    return out


# ---------------------------------------------------------------------------
# property reports

SUITES = ("row_sums", "exchangeability", "consistency", "stationarity", "recursion_equiv")
_TOL = {"row_sums": 1e-9, "exchangeability": 1e-12, "consistency": 1e-9,
        "stationarity": 1e-10, "recursion_equiv": 1e-12}
INVARIANCE_TOL = 1e-9


@dataclass
class PropertyReport:
    name: str
    max_violation: float
    tolerance: float
    counterexample: object = None
    checks: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed,
                "max_violation": self.max_violation, "tolerance": self.tolerance,
                "checks": self.checks, "counterexample": self.counterexample,
                "details": self.details}

    def to_text(self) -> str:
        line = "%s: %s  max violation %.3e (tol %.0e, %d checks)" % (
            self.name, "PASS" if self.passed else "FAIL", self.max_violation,
            self.tolerance, self.checks)
        if not self.passed:
            line += "\n  counterexample: %r" % (self.counterexample,)
        return line


class _Tracker:
    def __init__(self):
        self.worst, self.where, self.count = 0.0, None, 0

    def see(self, v: float, where) -> None:
        self.count += 1
        if v > self.worst or (self.where is None and v > 0):
            self.worst, self.where = v, where


def _perms(n):
    labels = tuple(range(1, n + 1))
    for p in itertools.permutations(labels):
        yield dict(zip(labels, p))


def partition_matrix_of_family(fam: PartitionKernelFamily, n: int) -> StochasticMatrix:
    states = enumerate_partitions(n, fam.k)
    g = states[0].ground
    return StochasticMatrix(states, np.array([[fam.evaluator(g, a, b) for b in states]
                                              for a in states]))


def _row_sums(n, kernel):
    tr = _Tracker()
    fam = kernel.base
    parts = enumerate_partitions(n, fam.k)
    g = parts[0].ground
    for a in parts:
        tr.see(abs(sum(fam.evaluator(g, a, b) for b in parts) - 1.0), ("partition", a.to_list()))
    trees = enumerate_trees(n, kernel.k)
    for a in trees:
        tr.see(abs(sum(ab_prob(a, b, kernel) for b in trees) - 1.0), ("tree", a.to_list()))
    return tr, {}


def _exchangeability(n, kernel):
    tr = _Tracker()
    fam = kernel.base
    parts = enumerate_partitions(n, fam.k)
    g = parts[0].ground
    trees = enumerate_trees(n, kernel.k)
    P = {(a, b): fam.evaluator(g, a, b) for a in parts for b in parts}
    Q = {(a, b): ab_prob(a, b, kernel) for a in trees for b in trees}
    for s in _perms(n):
        for (a, b), v in P.items():
            w = P[(apply_injection(a, s), apply_injection(b, s))]
            tr.see(abs(v - w), ("partition", a.to_list(), b.to_list(), s))
        for (a, b), v in Q.items():
            w = Q[(apply_injection(a, s), apply_injection(b, s))]
            tr.see(abs(v - w), ("tree", a.to_list(), b.to_list(), s))
    return tr, {}


def _consistency(n, kernel):
    tr = _Tracker()
    fam = kernel.base
    k = kernel.k
    parts = enumerate_partitions(n, fam.k)
    g = parts[0].ground
    g1 = g + (n + 1,)
    for a in parts:
        for a1 in fiber(a, fam.k):
            for b in parts:
                tot = sum(fam.evaluator(g1, a1, b1) for b1 in fiber(b, fam.k))
                tr.see(abs(tot - fam.evaluator(g, a, b)),
                       ("partition", a1.to_list(), b.to_list()))
    for t in enumerate_trees(n, k):
        for t1 in fiber(t, k):
            for u in enumerate_trees(n, k):
                tot = sum(ab_prob(t1, u1, kernel) for u1 in fiber(u, k))
                tr.see(abs(tot - ab_prob(t, u, kernel)), ("tree", t1.to_list(), u.to_list()))
    return tr, {}


def _stationarity(n, kernel):
    tr = _Tracker()
    inv = _Tracker()
    details = {}
    mats = [("tree", ab_matrix(n, kernel, max_n=max(n, 6)))]
    if n >= 1:
        mats.insert(0, ("partition", partition_matrix_of_family(kernel.base, n)))
    for level, M in mats:
        try:
            rho = stationary(M)
        except ValueError as e:
            details[level] = str(e)
            tr.see(math.inf, (level, str(e)))
            continue
        tr.see(float(np.abs(rho @ M.entries - rho).sum()), (level, "residual"))
        lookup = dict(zip(M.states, rho))
        for s in _perms(n):
            for st, r in lookup.items():
                inv.see(abs(lookup[apply_injection(st, s)] - r), (level, st.to_list(), s))
        details[level] = [float(x) for x in rho]
    details["invariance_violation"] = inv.worst
    if inv.worst > INVARIANCE_TOL:
        # report the invariance failure as a violation on the residual scale
        tr.see(math.inf, inv.where)
    tr.count += inv.count
    return tr, details


def _recursion_equiv(n, kernel):
    tr = _Tracker()
    trees = enumerate_trees(n, kernel.k)
    for a in trees:
        for b in trees:
            tr.see(abs(ab_prob(a, b, kernel) - ab_prob_recursive(a, b, kernel)),
                   (a.to_list(), b.to_list()))
    return tr, {}


_RUNNERS = {"row_sums": _row_sums, "exchangeability": _exchangeability,
            "consistency": _consistency, "stationarity": _stationarity,
            "recursion_equiv": _recursion_equiv}


def property_report(suite: str, n: int, k: int, nu: MixtureMeasure | None = None,
                    kernel: ABKernel | None = None, tol: float | None = None) -> PropertyReport:
    """Run one invariant check exhaustively at the partition and tree level.

    Parameters
    ----------
    suite : one of :data:`SUITES`
    kernel : ABKernel, optional
        Kernel to check; defaults to the CP(`nu`) kernel on ``[k]``.
    """
    if suite not in _RUNNERS:
        raise ValueError("unknown suite %r; choose from %s" % (suite, ", ".join(SUITES)))
    if kernel is None:
        if nu is None:
            raise ValueError("need nu or kernel")
        kernel = cp_ab_kernel(nu, k)
    tr, details = _RUNNERS[suite](n, kernel)
    tol = _TOL[suite] if tol is None else tol
    rep = PropertyReport(suite, tr.worst, tol, None, tr.count, details)
    if not rep.passed:
        rep.counterexample = tr.where
    return rep


# ---------------------------------------------------------------------------
# empirical comparisons

def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())


def empirical_law(samples, states: Sequence) -> np.ndarray:
    """Frequencies of `states` among `samples` (unknown states raise)."""
    c = Counter(samples)
    idx = {s: i for i, s in enumerate(states)}
    out = np.zeros(len(states))
    for s, m in c.items():
        out[idx[s]] = m
    return out / max(1, sum(c.values()))


def jump_matrix(M: StochasticMatrix) -> np.ndarray:
    """Off-diagonal part of `M` with rows renormalised (the embedded jump
    chain of the continuous-time process)."""
    E = M.entries.copy()
    np.fill_diagonal(E, 0.0)
    s = E.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s > 0, E / s, 0.0)
