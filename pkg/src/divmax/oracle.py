"""Exhaustive k-diversity for small instances.

Deliberately simple: every k-subset is enumerated in lexicographic id order
and scored from the full distance matrix; the first maximizer is kept.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .diversity import DiversityKind, evaluate_matrix
from .errors import OracleRefusal
from .kcenter import GeneralizedCoreset
from .metric import MetricSpace, PointSet

GUARD = 10 ** 6


@dataclass(frozen=True)
class OracleResult:
    value: float
    witness: PointSet
    subsets_examined: int


def _prepare(kind: DiversityKind, n: int, k: int, guard: int) -> int:
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    count = math.comb(n, k)
    if count > guard:
        raise OracleRefusal(f"C({n},{k}) = {count} subsets exceeds the guard {guard}")
    if not kind.exact_at(k):
        raise OracleRefusal(f"{kind.label} has no exact evaluator at k={k}")
    return count


def brute_force(kind: DiversityKind, S: PointSet, k: int, metric: MetricSpace,
                guard: int = GUARD) -> OracleResult:
    """``div_k(S)`` by enumerating all k-subsets."""
    kind = DiversityKind.parse(kind)
    if k < 2:
        raise ValueError("diversity needs k >= 2")
    _prepare(kind, len(S), k, guard)
    order = np.argsort(S.ids, kind="stable")
    D = metric.pairwise(S)
    best, witness, examined = -np.inf, None, 0
    for combo in itertools.combinations(order.tolist(), k):
        examined += 1
        value = evaluate_matrix(kind, D[np.ix_(combo, combo)]).value
        if value > best:
            best, witness = value, combo
    return OracleResult(float(best), S.take(list(witness)), examined)


def _bounded_compositions(caps: list[int], total: int):
    if not caps:
        if total == 0:
            yield ()
        return
    head, rest = caps[0], caps[1:]
    room = sum(rest)
    for c in range(min(head, total), -1, -1):
        if total - c <= room:
            for tail in _bounded_compositions(rest, total - c):
                yield (c,) + tail


def brute_force_generalized(kind: DiversityKind, T: GeneralizedCoreset, k: int,
                            metric: MetricSpace, guard: int = GUARD
                            ) -> tuple[float, GeneralizedCoreset, int]:
    """``gendiv_k(T)``: best coherent subset of expanded size ``k``.

    Returns ``(value, witness, subsets_examined)``.
    """
    kind = DiversityKind.parse(kind)
    if k < 2 or k > T.m:
        raise ValueError(f"need 2 <= k <= m(T)={T.m}, got {k}")
    if not kind.exact_at(k):
        raise OracleRefusal(f"{kind.label} has no exact evaluator at k={k}")
    D = metric.pairwise(T.points)
    caps = T.multiplicities.tolist()
    best, witness, examined = -np.inf, None, 0
    for comp in _bounded_compositions(caps, k):
        examined += 1
        if examined > guard:
            raise OracleRefusal(f"more than {guard} coherent subsets")
        idx = np.repeat(np.arange(len(caps)), comp)
        value = evaluate_matrix(kind, D[np.ix_(idx, idx)]).value
        if value > best:
            best, witness = value, comp
    keep = [i for i, c in enumerate(witness) if c]
    return float(best), GeneralizedCoreset(T.points.take(keep), [witness[i] for i in keep]), examined


def min_range(S: PointSet, k: int, metric: MetricSpace, guard: int = GUARD) -> float:
    """Optimal k-center range: minimum over k-subsets T of ``max_{p in S} d(p, T)``."""
    n = len(S)
    if math.comb(n, k) > guard:
        raise OracleRefusal(f"C({n},{k}) exceeds the guard {guard}")
    D = metric.pairwise(S)
    return float(min(D[list(c)].min(axis=0).max() for c in itertools.combinations(range(n), k)))


def max_farness(S: PointSet, k: int, metric: MetricSpace, guard: int = GUARD) -> float:
    """Optimal farness: maximum over k-subsets of the minimum pairwise distance."""
    if k < 2:
        raise ValueError("farness needs k >= 2")
    return brute_force(DiversityKind.REMOTE_EDGE, S, k, metric, guard).value
