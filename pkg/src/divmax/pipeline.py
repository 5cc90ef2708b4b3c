"""Simulated MapReduce runs of the composable core-set algorithms.

A run splits the input into ``ell`` partitions, builds a core-set of every
partition as an independent task, and solves the problem sequentially on the
union.  Tasks see immutable slices of the input and their results are merged
in partition order, so outputs do not depend on how many threads execute
them.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .diversity import DiversityKind, evaluate
from .errors import ConfigurationError, InvariantError
from .kcenter import GeneralizedCoreset, gmm, gmm_ext_positions
from .metric import MetricSpace, PointSet
from .seqsolve import GENERALIZED_KINDS, Solution, gendiv, solve_generalized, solve_sequential
from .streamcore import (BOUND_TOL, PRACTICAL_FACTOR, STRICT_CONSTANTS, DelegateAssignment,
                         coreset_eps_prime, end_to_end_eps_prime, strict_kprime)

CONTIGUOUS, RANDOM, ADVERSARIAL = "contiguous", "random", "adversarial"
PARTITIONINGS = (CONTIGUOUS, RANDOM, ADVERSARIAL)
DELEGATE_CONSTANT = 4.0
# seed of the fixed direction used to order sparse points adversarially
PROJECTION_SEED = 0x5EED


@dataclass(frozen=True)
class PipelineConfig:
    """Parameters shared by the MapReduce variants.

    ``kprime`` is the per-partition kernel size (default ``8 * k``); with
    ``strict`` it is derived from ``epsilon`` and the doubling dimension ``D``
    instead.  ``memory`` is the per-reducer budget of the multi-round variant.
    """

    k: int
    ell: int = 1
    kprime: int | None = None
    partitioning: str = CONTIGUOUS
    seed: int = 0
    epsilon: float = 1.0
    D: float = 1.0
    gamma: float = 1.0 / 3.0
    strict: bool = False
    threads: int = 1
    delegate_constant: float = DELEGATE_CONSTANT
    memory: int | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if self.ell < 1:
            raise ValueError(f"ell must be positive, got {self.ell}")
        if self.partitioning not in PARTITIONINGS:
            raise ValueError(f"unknown partitioning {self.partitioning!r}")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0 < self.gamma <= 1.0 / 3.0 + 1e-12:
            raise ValueError(f"gamma must lie in (0, 1/3], got {self.gamma}")
        if self.kprime is not None and self.kprime < 1:
            raise ValueError("kprime must be positive")
        if self.threads < 1:
            raise ValueError("threads must be positive")


@dataclass
class RoundTrace:
    """Per-task sizes and timings of one pipeline run."""

    rows: list[tuple[int, int, int, int, float]] = field(default_factory=list)

    HEADER = ("round", "partition", "input_size", "output_size", "millis")

    def add(self, rnd: int, partition: int, input_size: int, output_size: int, millis: float) -> None:
        self.rows.append((rnd, partition, input_size, output_size, millis))

    def partition_sizes(self, rnd: int) -> list[int]:
        return [r[2] for r in self.rows if r[0] == rnd]

    def output_sizes(self, rnd: int) -> list[int]:
        return [r[3] for r in self.rows if r[0] == rnd]

    def aggregate(self, rnd: int) -> int:
        """Total output of a round: what the next round receives."""
        return sum(self.output_sizes(rnd))

    def millis(self) -> float:
        return sum(r[4] for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.HEADER)
        for r in self.rows:
            writer.writerow([r[0], r[1], r[2], r[3], f"{r[4]:.3f}"])
        return buf.getvalue()


def partition(S: PointSet, cfg: PipelineConfig, positions: np.ndarray | None = None,
              ell: int | None = None, scheme: str | None = None) -> list[np.ndarray]:
    """Split positions of ``S`` into ``ell`` nearly equal parts.

    ``random`` cuts a seeded permutation; ``adversarial`` sorts by the first
    coordinate (sparse: by a fixed random direction) so that each part covers
    a narrow region.  Positions inside a part keep input order.
    """
    pos = np.arange(len(S)) if positions is None else np.asarray(positions)
    ell = cfg.ell if ell is None else ell
    scheme = cfg.partitioning if scheme is None else scheme
    if scheme == RANDOM:
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        pos = pos[rng.permutation(len(pos))]
    elif scheme == ADVERSARIAL:
        if S.is_sparse:
            w = np.random.Generator(np.random.PCG64(PROJECTION_SEED)).normal(size=S.dim)
            key = np.asarray(S.sparse[pos] @ w).ravel()
        else:
            key = S.dense[pos, 0]
        pos = pos[np.argsort(key, kind="stable")]
    parts = np.array_split(pos, ell)
    return [np.sort(p) for p in parts]


def _timed(fn, *args):
    start = time.perf_counter()
    out = fn(*args)
    return out, (time.perf_counter() - start) * 1e3


def _map(cfg: PipelineConfig, fn, items):
    """Run ``fn`` on every item, possibly concurrently; results come back in item order."""
    if cfg.threads == 1 or len(items) == 1:
        return [_timed(fn, it) for it in items]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(lambda it: _timed(fn, it), items))


def resolve_kprime(kind: DiversityKind, cfg: PipelineConfig, smallest_part: int,
                   epsilon: float | None = None) -> int:
    """Per-partition kernel size; strict sizes are capped at the smallest partition."""
    eps = cfg.epsilon if epsilon is None else epsilon
    if cfg.strict:
        constant = STRICT_CONSTANTS["gmm_ext" if kind.needs_delegates else "gmm"]
        return strict_kprime(cfg.k, end_to_end_eps_prime(eps, kind.alpha), cfg.D, constant,
                             cap=max(smallest_part, 1))
    kprime = PRACTICAL_FACTOR * cfg.k if cfg.kprime is None else cfg.kprime
    if kprime > smallest_part:
        raise ConfigurationError(f"a partition of {smallest_part} points is smaller than kprime={kprime}")
    return kprime


def _check_parts(parts: list[np.ndarray], k: int) -> None:
    small = min(len(p) for p in parts)
    if small < k:
        raise ConfigurationError(f"a partition of {small} points is smaller than k={k}")


def _coreset_task(S: PointSet, kind: DiversityKind, k: int, kprime: int, metric: MetricSpace,
                  cap: int | None = None):
    def task(pos: np.ndarray) -> np.ndarray:
        part = S.take(pos)
        if len(pos) <= kprime:
            return pos
        if kind.needs_delegates:
            local, _, _ = gmm_ext_positions(part, k, kprime, metric, delegates=cap)
        else:
            local = gmm(part, kprime, metric).positions
        return pos[local]
    return task


def _two_round(S: PointSet, kind: DiversityKind, cfg: PipelineConfig, metric: MetricSpace,
               cap: int | None, label: str) -> tuple[Solution, RoundTrace]:
    if len(S) < cfg.ell * cfg.k:
        raise ConfigurationError(f"need at least ell*k = {cfg.ell * cfg.k} points, got {len(S)}")
    parts = partition(S, cfg)
    _check_parts(parts, cfg.k)
    kprime = resolve_kprime(kind, cfg, min(len(p) for p in parts))
    trace = RoundTrace()
    results = _map(cfg, _coreset_task(S, kind, cfg.k, kprime, metric, cap), parts)
    for i, (core, ms) in enumerate(results):
        trace.add(1, i, len(parts[i]), len(core), ms)
    union = S.take(np.concatenate([core for core, _ in results]))
    sol, ms = _timed(solve_sequential, kind, union, cfg.k, metric)
    trace.add(2, 0, len(union), cfg.k, ms)
    sol.meta.update({"algorithm": label, "kprime": kprime, "aggregate": len(union),
                     "delegate_cap": cap, "coreset": union})
    return sol, trace


def mr_two_round(S: PointSet, kind: DiversityKind, cfg: PipelineConfig,
                 metric: MetricSpace) -> tuple[Solution, RoundTrace]:
    """Core-set per partition (kernel, plus delegates for sum-type objectives), then a sequential solve."""
    return _two_round(S, DiversityKind.parse(kind), cfg, metric, None, "mr2")


def delegate_cap(n: int, k: int, ell: int, c: float = DELEGATE_CONSTANT) -> int:
    """Delegates kept per cluster by the randomized variant: ``min(k - 1, ceil(c * max(ln n, k / ell)))``."""
    return min(k - 1, math.ceil(c * max(math.log(n), k / ell)))


def mr_randomized(S: PointSet, kind: DiversityKind, cfg: PipelineConfig,
                  metric: MetricSpace) -> tuple[Solution, RoundTrace]:
    """Two rounds over a random partition with fewer delegates per cluster."""
    kind = DiversityKind.parse(kind)
    if not kind.needs_delegates:
        raise ValueError(f"{kind.label} does not use delegates; run mr_two_round instead")
    cfg = replace(cfg, partitioning=RANDOM)
    cap = delegate_cap(len(S), cfg.k, cfg.ell, cfg.delegate_constant)
    return _two_round(S, kind, cfg, metric, cap, "mr2rand")


def level_epsilon(epsilon: float, alpha: float, gamma: float) -> float:
    """Precision per recursion level so that the compounded factor stays within ``alpha + epsilon``."""
    return epsilon / (alpha * (2.0 ** ((1.0 - gamma) / gamma) - 1.0))


def max_levels(gamma: float) -> int:
    return math.ceil((1.0 - gamma) / gamma - 1e-9)


def mr_multi_round(S: PointSet, kind: DiversityKind, cfg: PipelineConfig,
                   metric: MetricSpace) -> tuple[Solution, RoundTrace]:
    """Shrink the input level by level with per-chunk core-sets until it fits one reducer.

    The reducer budget is ``cfg.memory`` (default ``ceil(c * n^gamma)`` with
    ``c`` the per-chunk core-set size).  Level 1 partitions with
    ``cfg.partitioning``, later levels contiguously.
    """
    kind = DiversityKind.parse(kind)
    n = len(S)
    eps = level_epsilon(cfg.epsilon, kind.alpha, cfg.gamma)
    if cfg.strict:
        constant = STRICT_CONSTANTS["gmm_ext" if kind.needs_delegates else "gmm"]
        kprime = strict_kprime(cfg.k, coreset_eps_prime(eps), cfg.D, constant, cap=n)
    else:
        kprime = PRACTICAL_FACTOR * cfg.k if cfg.kprime is None else cfg.kprime
    core = kprime * (cfg.k if kind.needs_delegates else 1)
    budget = cfg.memory if cfg.memory is not None else math.ceil(core * n ** cfg.gamma)
    limit = max_levels(cfg.gamma)
    trace = RoundTrace()
    cur = np.arange(n)
    level = 0
    while len(cur) > budget:
        level += 1
        ell = math.ceil(len(cur) / budget)
        required = math.ceil(core * n ** cfg.gamma)
        if level > limit:
            raise ConfigurationError(f"{limit} levels leave {len(cur)} points above the budget "
                                     f"{budget}; a budget of about {required} is required")
        scheme = cfg.partitioning if level == 1 else CONTIGUOUS
        parts = partition(S, cfg, cur, ell, scheme)
        results = _map(cfg, _coreset_task(S, kind, cfg.k, kprime, metric), parts)
        for i, (out, ms) in enumerate(results):
            trace.add(level, i, len(parts[i]), len(out), ms)
        nxt = np.sort(np.concatenate([out for out, _ in results]))
        if len(nxt) >= len(cur):
            raise ConfigurationError(f"budget {budget} is too small for core-sets of {core} points; "
                                     f"a budget of about {required} is required")
        cur = nxt
    sol, ms = _timed(solve_sequential, kind, S.take(cur), cfg.k, metric)
    trace.add(level + 1, 0, len(cur), cfg.k, ms)
    sol.meta.update({"algorithm": "mrmulti", "kprime": kprime, "levels": level, "budget": budget,
                     "level_epsilon": eps})
    return sol, trace


def _generalized_task(S: PointSet, k: int, kprime: int, metric: MetricSpace):
    def task(pos: np.ndarray) -> tuple[GeneralizedCoreset, float]:
        part = S.take(pos)
        _, kernel, sizes = gmm_ext_positions(part, k, kprime, metric)
        return GeneralizedCoreset(kernel.points, sizes), kernel.range
    return task


def _instantiate_task(S: PointSet, metric: MetricSpace):
    def task(job):
        pos, pairs, delta = job
        if pairs is None:
            return [], []
        centers = CentersView(pairs.points, metric)
        inst = DelegateAssignment(pairs.points, pairs.multiplicities,
                                  np.full(pairs.s, delta))
        part = S.take(pos)
        for i in range(len(part)):
            inst.offer(i, int(part.ids[i]), centers.dists(part, i))
        if any(len(inst.held[j]) < pairs.multiplicities[j] for j in range(pairs.s)):
            raise InvariantError("a pair has fewer delegates in range than its multiplicity")
        picks = [p for j in range(pairs.s) for p in sorted(inst.held[j])]
        return pos[picks].tolist(), [inst.dist[p] for p in picks]
    return task


class CentersView:
    """Distances from points of a set to a fixed small set of centers."""

    def __init__(self, centers: PointSet, metric: MetricSpace):
        self.centers = centers
        self.metric = metric

    def dists(self, S: PointSet, i: int) -> np.ndarray:
        return self.metric.dists_between(self.centers, None, S, i)


def mr_three_round_gen(S: PointSet, kind: DiversityKind, cfg: PipelineConfig,
                       metric: MetricSpace) -> tuple[Solution, RoundTrace]:
    """Generalized core-sets per partition, a generalized solve, then per-partition instantiation.

    Round 2 receives only ``(point, multiplicity)`` pairs.  Each partition
    ships its kernel range with its pairs; round 3 replaces every chosen pair
    by that many distinct points of its partition within that range.
    """
    kind = DiversityKind.parse(kind)
    if kind not in GENERALIZED_KINDS:
        raise ValueError(f"{kind.label} has no generalized pipeline")
    if len(S) < cfg.ell * cfg.k:
        raise ConfigurationError(f"need at least ell*k = {cfg.ell * cfg.k} points, got {len(S)}")
    parts = partition(S, cfg)
    _check_parts(parts, 1)
    kprime = resolve_kprime(kind, cfg, min(len(p) for p in parts))
    trace = RoundTrace()
    results = _map(cfg, _generalized_task(S, cfg.k, kprime, metric), parts)
    for i, ((pairs, _), ms) in enumerate(results):
        trace.add(1, i, len(parts[i]), pairs.s, ms)
    union = GeneralizedCoreset.union([pairs for (pairs, _), _ in results])
    chosen, ms = _timed(solve_generalized, kind, union, cfg.k, metric)
    trace.add(2, 0, union.s, chosen.s, ms)

    owner = {}
    for i, ((pairs, _), _) in enumerate(results):
        for pid in pairs.points.ids.tolist():
            owner[pid] = i
    jobs = []
    for i, pos in enumerate(parts):
        mine = [j for j, pid in enumerate(chosen.points.ids.tolist()) if owner[pid] == i]
        sub = GeneralizedCoreset(chosen.points.take(mine), chosen.multiplicities[mine]) if mine else None
        jobs.append((pos, sub, results[i][0][1]))
    done = _map(cfg, _instantiate_task(S, metric), jobs)
    picks, dists = [], []
    for i, ((p, d), ms) in enumerate(done):
        trace.add(3, i, len(parts[i]), len(p), ms)
        picks += p
        dists += d
    points = S.take(picks)
    value = evaluate(kind, points, metric)
    gvalue = gendiv(kind, chosen, metric)
    radius = max((results[i][0][1] for i, (_, sub, _) in enumerate(jobs) if sub is not None),
                 default=0.0)
    bound = gvalue - kind.f(cfg.k) * 2.0 * radius
    if value.exact and value.value - bound < -BOUND_TOL * max(1.0, abs(gvalue)):
        raise InvariantError(f"instantiation value {value.value} below bound {bound}")
    meta = {"algorithm": "mr3gen", "kprime": kprime, "aggregate": union.s,
            "generalized": chosen, "gendiv": gvalue, "delta": max(dists, default=0.0),
            "kernel_range": radius, "bound_slack": value.value - bound}
    return Solution(points, value, kind, kind.alpha, meta), trace
