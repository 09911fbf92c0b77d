"""Bottleneck and p-Wasserstein distances between persistence diagrams.

Both distances use the L-infinity ground metric on the plane and allow
matching to the diagonal: each side of the matching problem is augmented
with the orthogonal projections of the other side's points, so a perfect
matching always exists and diagonal-to-diagonal pairs cost nothing.

* bottleneck: exact, by binary search over the finite set of candidate
  costs, with a Hopcroft-Karp perfect-matching feasibility check per
  candidate.
* wasserstein: exact, as an optimal assignment on the augmented square
  cost matrix with entries cost^p; the reported value is the p-th root of
  the optimal total.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .persistence import PersistenceDiagram


def _check_pair(a: PersistenceDiagram, b: PersistenceDiagram):
    if a.rank != b.rank:
        raise ValueError(f"rank mismatch: {a.rank} vs {b.rank}")
    pa = a.as_array()
    pb = b.as_array()
    if not (np.isfinite(pa).all() and np.isfinite(pb).all()):
        raise ValueError("diagrams must have finite coordinates")
    return pa, pb


def _pair_costs(pa: np.ndarray, pb: np.ndarray) -> np.ndarray:
    """(n, m) L-infinity costs between diagram points."""
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        return np.zeros((pa.shape[0], pb.shape[0]))
    return np.abs(pa[:, None, :] - pb[None, :, :]).max(axis=2)


def _diag_costs(pts: np.ndarray) -> np.ndarray:
    """L-infinity distance of each point to the diagonal: |birth - death| / 2."""
    if pts.shape[0] == 0:
        return np.zeros(0)
    return np.abs(pts[:, 0] - pts[:, 1]) / 2.0


def _feasible(cost: np.ndarray, diag_a: np.ndarray, diag_b: np.ndarray, lam: float) -> bool:
    """Does a perfect matching of max pair cost <= lam exist?

    Bipartite graph: left = a-points + projections of b, right = b-points +
    projections of a.  A point may use its own projection when its diagonal
    cost is within lam; projection-projection edges are free.
    """
    n, m = cost.shape
    size = n + m
    ii, jj = np.nonzero(cost <= lam)
    da = np.flatnonzero(diag_a <= lam)
    db = np.flatnonzero(diag_b <= lam)
    rows = np.concatenate(
        [ii, da, n + db, np.repeat(np.arange(n, size), n)]
    )
    cols = np.concatenate(
        [jj, m + da, db, np.tile(np.arange(m, size), m)]
    )
    graph = csr_matrix(
        (np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(size, size)
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    return int((match >= 0).sum()) == size


def bottleneck(a: PersistenceDiagram, b: PersistenceDiagram) -> float:
    """Bottleneck distance (minimal achievable maximum pair cost)."""
    pa, pb = _check_pair(a, b)
    cost = _pair_costs(pa, pb)
    diag_a = _diag_costs(pa)
    diag_b = _diag_costs(pb)
    candidates = np.unique(
        np.concatenate([cost.ravel(), diag_a, diag_b, np.zeros(1)])
    )
    lo, hi = 0, candidates.size - 1
    if _feasible(cost, diag_a, diag_b, candidates[lo]):
        return float(candidates[lo])
    # invariant: candidates[lo] infeasible, candidates[hi] feasible
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _feasible(cost, diag_a, diag_b, candidates[mid]):
            hi = mid
        else:
            lo = mid
    return float(candidates[hi])


def matching_cost(a: PersistenceDiagram, b: PersistenceDiagram, p: float = 2.0) -> float:
    """Optimal total matching cost sum(cost^p), without the p-th root.

    This is the statistic the benchmark tables report as "wasserstein"
    (p = 2 there); the rooted metric is ``wasserstein``.
    """
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    pa, pb = _check_pair(a, b)
    n, m = pa.shape[0], pb.shape[0]
    if n == 0 and m == 0:
        return 0.0
    size = n + m
    costs = np.zeros((size, size))
    costs[:n, :m] = _pair_costs(pa, pb) ** p
    costs[:n, m:] = (_diag_costs(pa) ** p)[:, None]
    costs[n:, :m] = (_diag_costs(pb) ** p)[None, :]
    rows, cols = linear_sum_assignment(costs)
    return float(costs[rows, cols].sum())


def wasserstein(a: PersistenceDiagram, b: PersistenceDiagram, p: float = 1.0) -> float:
    """p-Wasserstein distance (optimal sum of pair costs to the p, rooted)."""
    total = matching_cost(a, b, p)
    return total ** (1.0 / p)


def range_ratio(bottleneck_range, wasserstein_range) -> tuple[float, float]:
    """Ratio of the bottleneck range to the wasserstein range, edge by edge.

    Returns (low/low, high/high).  Raises on a zero denominator.
    """
    b_lo, b_hi = (float(v) for v in bottleneck_range)
    w_lo, w_hi = (float(v) for v in wasserstein_range)
    if w_lo == 0.0 or w_hi == 0.0:
        raise ValueError("wasserstein range has a zero endpoint; ratio undefined")
    return b_lo / w_lo, b_hi / w_hi
