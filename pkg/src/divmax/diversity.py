"""The six diversity objectives, plus range and farness of a subset."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .metric import MetricSpace, PointSet

CYCLE_EXACT_MAX = 12
BIPARTITION_EXACT_MAX = 20


class DiversityKind(enum.Enum):
    """A diversity objective together with its sequential approximation factor."""

    REMOTE_EDGE = ("remote_edge", 2)
    REMOTE_CLIQUE = ("remote_clique", 2)
    REMOTE_STAR = ("remote_star", 2)
    REMOTE_BIPARTITION = ("remote_bipartition", 3)
    REMOTE_TREE = ("remote_tree", 4)
    REMOTE_CYCLE = ("remote_cycle", 3)

    def __init__(self, label: str, alpha: int):
        self.label = label
        self.alpha = alpha

    @property
    def needs_delegates(self) -> bool:
        """True for the four objectives whose core-sets need distinct proxies."""
        return self not in (DiversityKind.REMOTE_EDGE, DiversityKind.REMOTE_CYCLE)

    def f(self, k: int) -> int:
        """Number of distances the objective sums over (instantiation error factor)."""
        if self is DiversityKind.REMOTE_CLIQUE:
            return k * (k - 1) // 2
        if self in (DiversityKind.REMOTE_STAR, DiversityKind.REMOTE_TREE):
            return k - 1
        if self is DiversityKind.REMOTE_BIPARTITION:
            return (k // 2) * ((k + 1) // 2)
        raise ValueError(f"{self.label} has no instantiation bound")

    def exact_at(self, k: int) -> bool:
        if self is DiversityKind.REMOTE_CYCLE:
            return k <= CYCLE_EXACT_MAX
        if self is DiversityKind.REMOTE_BIPARTITION:
            return k <= BIPARTITION_EXACT_MAX
        return True

    @classmethod
    def parse(cls, name: "str | DiversityKind") -> "DiversityKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        if not key.startswith("remote_"):
            key = "remote_" + key
        for kind in cls:
            if kind.label == key:
                return kind
        raise ValueError(f"unknown diversity kind {name!r}")

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class EvalReport:
    value: float
    exact: bool = True


def evaluate(kind: DiversityKind, S: PointSet, metric: MetricSpace) -> EvalReport:
    """Diversity of the whole set ``S`` under ``kind``."""
    kind = DiversityKind.parse(kind)
    if len(S) < 2:
        raise ValueError(f"{kind.label} needs at least 2 points, got {len(S)}")
    return evaluate_matrix(kind, metric.pairwise(S))


def evaluate_matrix(kind: DiversityKind, D: np.ndarray) -> EvalReport:
    """Diversity of a point set given its symmetric distance matrix ``D``."""
    k = D.shape[0]
    if k < 2:
        raise ValueError(f"{kind.label} needs at least 2 points, got {k}")
    if kind is DiversityKind.REMOTE_EDGE:
        return EvalReport(float(D[np.triu_indices(k, 1)].min()))
    if kind is DiversityKind.REMOTE_CLIQUE:
        return EvalReport(float(D[np.triu_indices(k, 1)].sum()))
    if kind is DiversityKind.REMOTE_STAR:
        return EvalReport(float(D.sum(axis=1).min()))
    if kind is DiversityKind.REMOTE_TREE:
        return EvalReport(mst_weight(D))
    if kind is DiversityKind.REMOTE_CYCLE:
        if k <= CYCLE_EXACT_MAX:
            return EvalReport(held_karp(D))
        return EvalReport(tour_two_opt(D), exact=False)
    if k <= BIPARTITION_EXACT_MAX:
        return EvalReport(min_balanced_cut(D))
    return EvalReport(balanced_cut_local_search(D), exact=False)


def mst_weight(D: np.ndarray) -> float:
    """Prim's algorithm on the complete graph, O(k^2)."""
    k = D.shape[0]
    in_tree = np.zeros(k, dtype=bool)
    in_tree[0] = True
    best = D[0].copy()
    total = 0.0
    for _ in range(k - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(np.argmin(cand))
        total += float(cand[j])
        in_tree[j] = True
        best = np.minimum(best, D[j])
    return total


def held_karp(D: np.ndarray) -> float:
    """Exact minimum Hamiltonian cycle weight by dynamic programming over subsets.

    Two points form the degenerate cycle p -> q -> p of weight ``2 d(p, q)``.
    """
    k = D.shape[0]
    if k == 2:
        return float(2.0 * D[0, 1])
    if k == 3:
        return float(D[0, 1] + D[1, 2] + D[0, 2])
    m = k - 1  # nodes 1..k-1 encoded as bits 0..m-1
    sub = D[1:, 1:]
    dp = np.full((1 << m, m), np.inf)
    for j in range(m):
        dp[1 << j, j] = D[0, j + 1]
    for mask in range(1, 1 << m):
        if mask & (mask - 1) == 0:
            continue
        bits = [j for j in range(m) if mask >> j & 1]
        prev = dp[[mask ^ (1 << j) for j in bits]]
        dp[mask, bits] = (prev + sub[:, bits].T).min(axis=1)
    return float((dp[(1 << m) - 1] + D[0, 1:]).min())


def tour_two_opt(D: np.ndarray) -> float:
    """Nearest-neighbour tour improved by 2-opt moves; an upper bound on w(TSP)."""
    k = D.shape[0]
    tour = [0]
    seen = np.zeros(k, dtype=bool)
    seen[0] = True
    for _ in range(k - 1):
        row = np.where(seen, np.inf, D[tour[-1]])
        nxt = int(np.argmin(row))
        tour.append(nxt)
        seen[nxt] = True
    tour = np.asarray(tour)
    improved = True
    while improved:
        improved = False
        for i in range(k - 1):
            a, b = tour[i], tour[i + 1]
            c = tour[i + 2:]
            d = np.roll(tour, -1)[i + 2:]
            if i == 0:
                c, d = c[:-1], d[:-1]
            if len(c) == 0:
                continue
            gain = D[a, b] + D[c, d] - D[a, c] - D[b, d]
            j = int(np.argmax(gain))
            if gain[j] > 1e-12:
                jj = i + 2 + j
                tour[i + 1: jj + 1] = tour[i + 1: jj + 1][::-1]
                improved = True
    return float(D[tour, np.roll(tour, -1)].sum())


def min_balanced_cut(D: np.ndarray) -> float:
    """Exact minimum cut between a floor(k/2)-subset and its complement."""
    k = D.shape[0]
    h = k // 2
    rowsum = D.sum(axis=1)
    if k % 2 == 0:
        # each split counted once: fix point 0 on the first side
        combos = (np.fromiter(itertools.chain.from_iterable((0,) + c for c in
                                                              itertools.combinations(range(1, k), h - 1)),
                              dtype=np.int64).reshape(-1, h))
    else:
        combos = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(k), h)),
                             dtype=np.int64).reshape(-1, h)
    best = np.inf
    for lo in range(0, len(combos), 20000):
        C = combos[lo: lo + 20000]
        inner = D[C[:, :, None], C[:, None, :]].sum(axis=(1, 2))
        cut = rowsum[C].sum(axis=1) - inner
        best = min(best, float(cut.min()))
    return best


def balanced_cut_local_search(D: np.ndarray) -> float:
    """Swap-based local search for a small balanced cut; an upper bound on the minimum."""
    k = D.shape[0]
    h = k // 2
    side = np.zeros(k, dtype=bool)
    # start from the tightest cluster around point 0
    side[np.argsort(D[0], kind="stable")[:h]] = True
    for _ in range(10 * k * k):
        s_in = D[:, side].sum(axis=1)
        s_out = D[:, ~side].sum(axis=1)
        q = np.flatnonzero(side)
        z = np.flatnonzero(~side)
        delta = (s_in[q] - s_out[q])[:, None] + (s_out[z] - s_in[z])[None, :] + 2.0 * D[np.ix_(q, z)]
        a, b = np.unravel_index(int(np.argmin(delta)), delta.shape)
        if delta[a, b] >= -1e-12:
            break
        side[q[a]] = False
        side[z[b]] = True
    return float(D[np.ix_(side, ~side)].sum())


def range_of(T: PointSet, S: PointSet, metric: MetricSpace) -> float:
    """``max_{p in S \\ T} d(p, T)``; 0 when ``T`` covers ``S``."""
    if len(T) == 0:
        raise ValueError("range_of needs a nonempty T")
    sids = S.id_set()
    missing = [int(i) for i in T.ids if int(i) not in sids]
    if missing:
        raise ValueError(f"T is not a subset of S (ids {missing[:5]} not in S)")
    tids = T.id_set()
    rest = np.flatnonzero([int(i) not in tids for i in S.ids])
    if len(rest) == 0:
        return 0.0
    best = np.full(len(rest), np.inf)
    for j in range(len(T)):
        np.minimum(best, metric.dists_between(S, rest, T, j), out=best)
    return float(best.max())


def farness_of(T: PointSet, metric: MetricSpace) -> float:
    """Minimum pairwise distance inside ``T``."""
    if len(T) < 2:
        raise ValueError("farness_of needs at least 2 points")
    D = metric.pairwise(T)
    return float(D[np.triu_indices(len(T), 1)].min())
