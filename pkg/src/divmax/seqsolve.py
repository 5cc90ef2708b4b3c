"""Sequential approximation algorithms, on plain point sets and on generalized core-sets.

Two selection rules cover the six objectives:

* greedy farthest-pair matching (repeatedly take the farthest pair of points
  still available) for remote-clique, remote-star and remote-bipartition;
* farthest-point traversal (GMM) for remote-edge, remote-tree and remote-cycle.

Both rules run unchanged on a multiset given as ``(point, multiplicity)``
pairs: replicas of a point are candidates at distance 0 from each other, and
memory stays proportional to the number of distinct points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diversity import DiversityKind, EvalReport, evaluate, evaluate_matrix
from .kcenter import GeneralizedCoreset, gmm
from .metric import MetricSpace, PointSet, argmax_by_id

MATCHING_KINDS = frozenset({DiversityKind.REMOTE_CLIQUE, DiversityKind.REMOTE_STAR,
                            DiversityKind.REMOTE_BIPARTITION})
GENERALIZED_KINDS = frozenset({DiversityKind.REMOTE_CLIQUE, DiversityKind.REMOTE_STAR,
                               DiversityKind.REMOTE_BIPARTITION, DiversityKind.REMOTE_TREE})


@dataclass
class Solution:
    """A k-point answer (or a generalized one) with its diversity.

    ``points`` is a :class:`PointSet` for ordinary solutions and a
    :class:`GeneralizedCoreset` for :func:`solve_generalized`.
    """

    points: PointSet | GeneralizedCoreset
    value: EvalReport
    kind: DiversityKind
    alpha: int
    meta: dict = field(default_factory=dict)


def greedy_matching(S: PointSet, counts: np.ndarray, k: int, metric: MetricSpace) -> np.ndarray:
    """Farthest-pair greedy matching on a multiset; returns how many copies of each point were picked.

    ``k // 2`` pairs are taken one at a time, always the farthest pair among
    the copies still available (two replicas of one point form a pair at
    distance 0).  For odd ``k`` the last pick maximizes the summed distance to
    everything chosen.  Ties go to smaller ids.
    """
    n = len(S)
    left = np.asarray(counts, dtype=np.int64).copy()
    picked = np.zeros(n, dtype=np.int64)
    ids = S.ids
    best = np.full(n, -np.inf)
    target = np.full(n, -1, dtype=np.int64)

    def refresh(r: int) -> None:
        d = metric.dists(S, r)
        d[left < 1] = -np.inf
        d[r] = 0.0 if left[r] >= 2 else -np.inf
        if np.all(d == -np.inf):
            best[r], target[r] = -np.inf, -1
            return
        t = argmax_by_id(d, ids)
        best[r], target[r] = d[t], t

    for r in range(n):
        if left[r] >= 1:
            refresh(r)
    for _ in range(k // 2):
        live = np.where(left >= 1, best, -np.inf)
        i = argmax_by_id(live, ids)
        j = int(target[i])
        if j < 0:
            raise ValueError("not enough points for the requested k")
        left[i] -= 1
        left[j] -= 1
        picked[i] += 1
        picked[j] += 1
        stale = np.flatnonzero((left >= 1) & ((target == i) | (target == j)))
        for r in set(stale.tolist()) | {r for r in (i, j) if left[r] >= 1}:
            refresh(r)
        for r in (i, j):
            if left[r] < 1:
                best[r], target[r] = -np.inf, -1
    if k % 2:
        score = np.zeros(n)
        for y in np.flatnonzero(picked):
            score += picked[y] * metric.dists(S, int(y))
        score[left < 1] = -np.inf
        x = argmax_by_id(score, ids)
        picked[x] += 1
    return picked


def greedy_gmm_multiset(S: PointSet, counts: np.ndarray, k: int, metric: MetricSpace) -> np.ndarray:
    """Farthest-point traversal over a multiset; returns copies picked per point.

    Distinct points are taken while some candidate lies at positive distance
    from the selection; the remaining slots are filled with replicas, smallest
    id first.
    """
    n = len(S)
    counts = np.asarray(counts, dtype=np.int64)
    picked = np.zeros(n, dtype=np.int64)
    picked[0] = 1
    key = metric.dists(S, 0)
    key[0] = -1.0
    taken = 1
    while taken < k:
        c = argmax_by_id(key, S.ids)
        if key[c] <= 0.0:
            break
        picked[c] = 1
        taken += 1
        np.minimum(key, metric.dists(S, c), out=key)
        key[c] = -1.0
    order = np.argsort(S.ids, kind="stable")
    for i in order:
        if taken == k:
            break
        extra = min(k - taken, counts[i] - picked[i])
        picked[i] += extra
        taken += extra
    if taken < k:
        raise ValueError("not enough points for the requested k")
    return picked


def solve_sequential(kind: DiversityKind, S: PointSet, k: int, metric: MetricSpace) -> Solution:
    """Approximate ``div_k(S)`` within the objective's factor ``alpha``."""
    kind = DiversityKind.parse(kind)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > len(S):
        raise ValueError(f"k={k} exceeds the number of points {len(S)}")
    if kind in MATCHING_KINDS:
        picked = greedy_matching(S, np.ones(len(S), dtype=np.int64), k, metric)
        chosen = S.take(np.flatnonzero(picked))
        rule = "matching"
    else:
        chosen = gmm(S, k, metric).points
        rule = "gmm"
    return Solution(chosen, evaluate(kind, chosen, metric), kind, kind.alpha,
                    {"rule": rule, "input_size": len(S)})


def gendiv(kind: DiversityKind, T: GeneralizedCoreset, metric: MetricSpace) -> float:
    """Diversity of the expansion of ``T`` (replicas at distance 0)."""
    kind = DiversityKind.parse(kind)
    if T.m < 2:
        raise ValueError(f"generalized diversity needs m(T) >= 2, got {T.m}")
    return evaluate_matrix(kind, T.expansion_matrix(metric)).value


def gendiv_report(kind: DiversityKind, T: GeneralizedCoreset, metric: MetricSpace) -> EvalReport:
    return evaluate_matrix(DiversityKind.parse(kind), T.expansion_matrix(metric))


def solve_generalized(kind: DiversityKind, T: GeneralizedCoreset, k: int,
                      metric: MetricSpace) -> GeneralizedCoreset:
    """Coherent subset of ``T`` with expanded size ``k`` approximating ``gendiv_k(T)``."""
    kind = DiversityKind.parse(kind)
    if kind not in GENERALIZED_KINDS:
        raise ValueError(f"{kind.label} has no generalized solver")
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if T.m < k:
        raise ValueError(f"m(T)={T.m} is smaller than k={k}")
    if T.m == k:
        return T
    if kind in MATCHING_KINDS:
        picked = greedy_matching(T.points, T.multiplicities, k, metric)
    else:
        picked = greedy_gmm_multiset(T.points, T.multiplicities, k, metric)
    keep = np.flatnonzero(picked)
    return GeneralizedCoreset(T.points.take(keep), picked[keep])
