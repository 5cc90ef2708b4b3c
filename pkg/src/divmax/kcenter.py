"""Greedy k-center (GMM) and the two core-set constructors built on it.

``gmm`` is the classic farthest-point traversal: start from the first point in
input order and repeatedly add the point farthest from the centers chosen so
far.  ``gmm_ext`` clusters the input around the resulting kernel and keeps up
to ``k - 1`` extra delegates per cluster; ``gmm_gen`` keeps only the count of
those delegates, producing a generalized core-set of ``(point, multiplicity)``
pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metric import MetricSpace, Point, PointSet, argmax_by_id


@dataclass(frozen=True)
class Kernel:
    """Output of :func:`gmm`.

    Attributes:
        points: the centers, in greedy insertion order.
        positions: positions of the centers in the input set.
        radii: ``radii[j]`` is the distance of center ``j`` from centers ``0..j-1``
            at the moment it was picked (``inf`` for the first one).
        assignment: cluster index (into ``points``) of every input point; each
            point goes to its nearest center, ties to the earlier center.
        range: maximum distance of an input point from its center.
    """

    points: PointSet
    positions: np.ndarray
    radii: np.ndarray
    assignment: np.ndarray
    range: float


def _check_sizes(n: int, kprime: int, k: int | None = None) -> None:
    if kprime < 1:
        raise ValueError(f"kprime must be positive, got {kprime}")
    if kprime > n:
        raise ValueError(f"kprime={kprime} exceeds the number of points {n}")
    if k is not None and k < 1:
        raise ValueError(f"k must be positive, got {k}")


def gmm(S: PointSet, kprime: int, metric: MetricSpace) -> Kernel:
    """Farthest-point traversal selecting ``kprime`` centers in O(|S| kprime) time."""
    n = len(S)
    _check_sizes(n, kprime)
    positions = np.empty(kprime, dtype=np.int64)
    radii = np.empty(kprime)
    positions[0], radii[0] = 0, np.inf
    mind = metric.dists(S, 0)
    assign = np.zeros(n, dtype=np.int64)
    # chosen centers are parked at -1 so the argmax never revisits them
    key = mind.copy()
    key[0] = -1.0
    for j in range(1, kprime):
        c = argmax_by_id(key, S.ids)
        positions[j] = c
        radii[j] = mind[c]
        d = metric.dists(S, c)
        closer = d < mind
        assign[closer] = j
        assign[c] = j
        np.minimum(mind, d, out=mind)
        mind[c] = 0.0
        np.minimum(key, d, out=key)
        key[c] = -1.0
    return Kernel(S.take(positions), positions, radii, assign,
                  float(mind.max()) if n else 0.0)


def _cluster_members(kernel: Kernel, limit: int) -> list[np.ndarray]:
    """Per cluster: the center followed by up to ``limit`` other members in input order."""
    kprime = len(kernel.positions)
    assign = kernel.assignment
    is_center = np.zeros(len(assign), dtype=bool)
    is_center[kernel.positions] = True
    others = np.flatnonzero(~is_center)
    order = others[np.argsort(assign[others], kind="stable")]
    bounds = np.searchsorted(assign[order], np.arange(kprime + 1))
    return [np.concatenate(([kernel.positions[j]], order[bounds[j]: bounds[j + 1]][:limit]))
            for j in range(kprime)]


def gmm_ext_positions(S: PointSet, k: int, kprime: int, metric: MetricSpace,
                      delegates: int | None = None) -> tuple[np.ndarray, Kernel, np.ndarray]:
    """Positions of the GMM-EXT core-set, the kernel, and per-cluster set sizes.

    ``delegates`` caps the extra points kept per cluster (default ``k - 1``).
    """
    _check_sizes(len(S), kprime, k)
    kernel = gmm(S, kprime, metric)
    limit = k - 1 if delegates is None else max(0, min(k - 1, delegates))
    groups = _cluster_members(kernel, limit)
    sizes = np.asarray([len(g) for g in groups], dtype=np.int64)
    return np.concatenate(groups), kernel, sizes


def gmm_ext(S: PointSet, k: int, kprime: int, metric: MetricSpace) -> PointSet:
    """Kernel of ``kprime`` centers plus up to ``k - 1`` delegates from each cluster."""
    positions, _, _ = gmm_ext_positions(S, k, kprime, metric)
    return S.take(positions)


class GeneralizedCoreset:
    """A set of ``(point, multiplicity)`` pairs with distinct points.

    ``s`` is the number of pairs, ``m`` the expanded size (sum of
    multiplicities).  Replicas of one point are at distance 0 from each other.
    """

    def __init__(self, points: PointSet, multiplicities):
        mult = np.asarray(multiplicities, dtype=np.int64)
        if mult.shape != (len(points),):
            raise ValueError("one multiplicity per point required")
        if np.any(mult < 1):
            raise ValueError("multiplicities must be positive")
        if len(set(points.ids.tolist())) != len(points):
            raise ValueError("points of a generalized core-set must be distinct")
        mult.setflags(write=False)
        self.points = points
        self.multiplicities = mult

    @classmethod
    def from_pairs(cls, pairs) -> "GeneralizedCoreset":
        pairs = list(pairs)
        return cls(PointSet.from_points([p for p, _ in pairs]), [m for _, m in pairs])

    @classmethod
    def union(cls, parts) -> "GeneralizedCoreset":
        parts = list(parts)
        return cls(PointSet.concat([t.points for t in parts]),
                   np.concatenate([t.multiplicities for t in parts]))

    @property
    def s(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return int(self.multiplicities.sum())

    def pairs(self) -> list[tuple[Point, int]]:
        return [(self.points[i], int(self.multiplicities[i])) for i in range(self.s)]

    def as_dict(self) -> dict[int, int]:
        """Point id -> multiplicity."""
        return dict(zip(self.points.ids.tolist(), self.multiplicities.tolist()))

    def is_coherent_subset_of(self, other: "GeneralizedCoreset") -> bool:
        theirs = other.as_dict()
        return all(pid in theirs and m <= theirs[pid] for pid, m in self.as_dict().items())

    def expansion_index(self) -> np.ndarray:
        """Position of the underlying point for every replica of the expansion."""
        return np.repeat(np.arange(self.s), self.multiplicities)

    def expansion_matrix(self, metric: MetricSpace) -> np.ndarray:
        """Distance matrix of the expansion (replica-replica distance 0)."""
        idx = self.expansion_index()
        return metric.pairwise(self.points)[np.ix_(idx, idx)]

    def __repr__(self):
        return f"GeneralizedCoreset({sorted(self.as_dict().items())})"


def gmm_gen_with_radius(S: PointSet, k: int, kprime: int,
                        metric: MetricSpace) -> tuple[GeneralizedCoreset, float]:
    """GMM-GEN plus the kernel range, which bounds every delegate's distance to its pair."""
    _, kernel, sizes = gmm_ext_positions(S, k, kprime, metric)
    return GeneralizedCoreset(kernel.points, sizes), kernel.range


def gmm_gen(S: PointSet, k: int, kprime: int, metric: MetricSpace) -> GeneralizedCoreset:
    """Kernel points with multiplicity equal to the GMM-EXT delegate-set size."""
    return gmm_gen_with_radius(S, k, kprime, metric)[0]
