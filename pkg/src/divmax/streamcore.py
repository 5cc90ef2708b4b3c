"""One-pass streaming core-sets and the two-pass generalized streaming algorithm.

The streaming kernel keeps at most ``kprime + 1`` points and a distance
threshold ``d`` that doubles from phase to phase.  A phase starts with a
*merge*: points of the kernel closer than ``2d`` to an earlier kept point are
dropped.  It continues with *updates*: an arriving point within ``4d`` of the
kernel is discarded, any other point joins the kernel; the phase ends when the
kernel is full again.

Three bookkeeping modes share the same kernel:

* ``plain``: only the kernel (k-center style core-set for remote-edge/cycle);
* ``delegates``: every kernel point carries a list of at most ``k`` real
  points it stands for (core-set for the four sum-type objectives);
* ``counts``: the lists are replaced by their lengths, yielding a
  generalized core-set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .diversity import DiversityKind, evaluate
from .errors import ConsistencyError, InvariantError
from .kcenter import GeneralizedCoreset
from .metric import CenterBuffer, MetricSpace, Point, PointSet, stream_vector
from .seqsolve import GENERALIZED_KINDS, Solution, gendiv, solve_generalized

PLAIN, DELEGATES, COUNTS = "plain", "delegates", "counts"

# multipliers of 1/eps' in the strict core-set sizes, per construction
STRICT_CONSTANTS = {"smm": 32, "smm_ext": 64, "gmm": 8, "gmm_ext": 16}
PRACTICAL_FACTOR = 8
BOUND_TOL = 1e-9


def coreset_eps_prime(epsilon: float) -> float:
    """Precision ``eps'`` giving a ``(1 + epsilon)`` core-set: ``1 - eps' = 1 / (1 + epsilon)``."""
    return epsilon / (1.0 + epsilon)


def end_to_end_eps_prime(epsilon: float, alpha: float) -> float:
    """Precision ``eps'`` with ``1 / (1 - eps') = 1 + epsilon / alpha`` (overall factor ``alpha + epsilon``)."""
    return epsilon / (alpha + epsilon)


def strict_kprime(k: int, eps_prime: float, D: float, constant: int, cap: int | None = None) -> int:
    """``ceil((constant / eps')^D * k)``, optionally capped (a core-set never needs more than the input)."""
    if not 0 < eps_prime < 1:
        raise ValueError(f"eps' must lie in (0, 1), got {eps_prime}")
    log_size = D * math.log(constant / eps_prime) + math.log(k)
    if cap is not None and log_size > math.log(cap) + 1e-12:
        return cap
    value = math.ceil(math.exp(log_size) * (1 - 1e-12))
    return value if cap is None else min(value, cap)


@dataclass(frozen=True)
class StreamParams:
    """Sizes for the streaming constructions.

    With ``strict`` the kernel size comes from the worst-case bound for
    doubling dimension ``D``; otherwise ``kprime`` is used, defaulting to
    ``8 * k``.
    """

    k: int
    kprime: int | None = None
    epsilon: float = 1.0
    D: float = 1.0
    strict: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.kprime is not None and self.kprime < self.k:
            raise ValueError(f"kprime={self.kprime} is smaller than k={self.k}")
        if self.D <= 0:
            raise ValueError("the dimension D must be positive")

    def resolve(self, construction: str, n: int | None = None,
                eps_prime: float | None = None) -> int:
        """Kernel size for ``construction`` ('smm' or 'smm_ext') on a stream of ``n`` points."""
        if self.strict:
            ep = coreset_eps_prime(self.epsilon) if eps_prime is None else eps_prime
            return strict_kprime(self.k, ep, self.D, STRICT_CONSTANTS[construction],
                                 cap=None if n is None else max(n, self.k))
        kprime = PRACTICAL_FACTOR * self.k if self.kprime is None else self.kprime
        return kprime if n is None else min(kprime, max(n, self.k))


@dataclass(frozen=True)
class PhaseBoundary:
    """Snapshot taken when a phase starts, before its merge step."""

    phase: int
    consumed: int
    kernel: tuple[int, ...]
    threshold: float


@dataclass
class StreamState:
    """Single-consumer state machine for the streaming kernel.

    Points are referred to by their position in the source set.  ``record``
    keeps a :class:`PhaseBoundary` per phase so the invariants can be replayed
    afterwards.
    """

    k: int
    kprime: int
    metric: MetricSpace
    dim: int
    mode: str = PLAIN
    record: bool = False
    centers: list[int] = field(default_factory=list)
    members: dict[int, list[int]] = field(default_factory=dict)
    counts: dict[int, int] = field(default_factory=dict)
    radius: dict[int, float] = field(default_factory=dict)
    removed: list[int] = field(default_factory=list)
    threshold: float = 0.0
    phase: int = 0
    consumed: int = 0
    peak: int = 0
    history: list[PhaseBoundary] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in (PLAIN, DELEGATES, COUNTS):
            raise ValueError(f"unknown mode {self.mode!r}")
        self.buffer = CenterBuffer(self.metric, self.dim, self.kprime + 1)

    # -- bookkeeping helpers ------------------------------------------------

    def _open(self, pos: int, x) -> None:
        self.centers.append(pos)
        self.buffer.append(x)
        if self.mode == DELEGATES:
            self.members[pos] = [pos]
        elif self.mode == COUNTS:
            self.counts[pos] = 1
        self.radius[pos] = 0.0
        self.peak = max(self.peak, len(self.centers))
        if len(self.centers) > self.kprime + 1:
            raise InvariantError("kernel grew beyond kprime + 1 points")

    def _size(self, t: int) -> int:
        return len(self.members[t]) if self.mode == DELEGATES else self.counts.get(t, 1)

    def _absorb(self, t: int, pos: int, dist: float) -> None:
        if self.mode == PLAIN or self._size(t) >= self.k:
            return
        if self.mode == DELEGATES:
            self.members[t].append(pos)
        else:
            self.counts[t] += 1
        self.radius[t] = max(self.radius[t], dist)

    def _inherit(self, t1: int, t2: int, dist: float) -> None:
        # the receiving list never exceeds k points
        moved = min(self._size(t1), self.k - self._size(t2))
        if self.mode == DELEGATES:
            self.members[t2].extend(self.members[t1][:moved])
            del self.members[t1]
        else:
            self.counts[t2] += moved
            del self.counts[t1]
        if moved > 0:
            self.radius[t2] = max(self.radius[t2], self.radius[t1] + dist)

    # -- phases -----------------------------------------------------------

    def _start_phase(self) -> None:
        self.phase += 1
        if self.record:
            self.history.append(PhaseBoundary(self.phase, self.consumed, tuple(self.centers), self.threshold))
        D = self.buffer.pairwise()
        limit = 2.0 * self.threshold
        keep = np.zeros(len(self.centers), dtype=bool)
        for i in range(len(self.centers)):
            keep[i] = not np.any(D[i, keep] <= limit)
        removed = np.flatnonzero(~keep)
        self.removed = [self.centers[i] for i in removed]
        if self.mode != PLAIN:
            kept = np.flatnonzero(keep)
            for i in removed:
                j = kept[int(np.argmin(D[i, kept]))]
                self._inherit(self.centers[i], self.centers[j], float(D[i, j]))
        for i in removed:
            self.radius.pop(self.centers[i], None)
        self.centers = [t for t, flag in zip(self.centers, keep) if flag]
        self.buffer.keep(keep)

    def _end_phase(self) -> None:
        if self.threshold > 0:
            self.threshold *= 2.0
        else:
            # duplicates made the threshold 0; restart from the closest distinct pair
            D = self.buffer.pairwise()
            self.threshold = float(D[np.triu_indices(len(self.centers), 1)].min())

    def push(self, pos: int, x) -> None:
        """Consume the point at position ``pos`` whose vector is ``x``."""
        if self.phase == 0:
            self.consumed += 1
            self._open(pos, x)
            if len(self.centers) == self.kprime + 1:
                D = self.buffer.pairwise()
                self.threshold = float(D[np.triu_indices(len(self.centers), 1)].min())
                self._start_phase()
            return
        # a kernel still full after its merge closes its phase on the next arrival
        while len(self.centers) == self.kprime + 1:
            self._end_phase()
            self._start_phase()
        self.consumed += 1
        dists = self.buffer.dists(x)
        j = int(np.argmin(dists))
        if dists[j] <= 4.0 * self.threshold:
            self._absorb(self.centers[j], pos, float(dists[j]))
            return
        self._open(pos, x)
        if len(self.centers) == self.kprime + 1:
            self._end_phase()
            self._start_phase()

    # -- results ----------------------------------------------------------

    def kernel(self) -> list[int]:
        """Kernel positions, padded from the last merge's removals if fewer than ``k``."""
        if len(self.centers) >= self.k:
            return list(self.centers)
        return list(self.centers) + self.removed[: self.k - len(self.centers)]

    def delegates(self) -> list[int]:
        if self.phase == 0:
            return list(self.centers)
        return [p for t in self.centers for p in self.members[t]]

    def generalized(self) -> tuple[list[int], list[int], list[float]]:
        """Kernel positions, their counts, and a certified radius per kernel point.

        Every kernel point ``t`` stands for ``counts[t]`` distinct input points
        (itself included), all within ``radius[t]`` of it.
        """
        return (list(self.centers), [self.counts.get(t, 1) for t in self.centers],
                [self.radius[t] for t in self.centers])


def _as_pointset(stream) -> PointSet:
    if isinstance(stream, PointSet):
        return stream
    return PointSet.from_points(list(stream))


def run_stream(S: PointSet, k: int, kprime: int, metric: MetricSpace, mode: str = PLAIN,
               record: bool = False) -> StreamState:
    """Feed every point of ``S`` in order through a fresh :class:`StreamState`."""
    if len(S) == 0:
        raise ValueError("empty stream")
    state = StreamState(k, kprime, metric, max(S.dim, 1), mode, record)
    for i in range(len(S)):
        state.push(i, stream_vector(S, i))
    return state


def smm_run(stream: PointSet | Iterable[Point], params: StreamParams, metric: MetricSpace) -> PointSet:
    """Streaming kernel of size between ``k`` and ``kprime + 1`` (core-set for remote-edge/cycle)."""
    S = _as_pointset(stream)
    state = run_stream(S, params.k, params.resolve("smm", len(S)), metric, PLAIN)
    return S.take(state.kernel())


def smm_ext_run(stream: PointSet | Iterable[Point], params: StreamParams,
                metric: MetricSpace) -> PointSet:
    """Streaming kernel plus up to ``k`` delegates per kernel point, returned as one set."""
    S = _as_pointset(stream)
    state = run_stream(S, params.k, params.resolve("smm_ext", len(S)), metric, DELEGATES)
    return S.take(state.delegates())


class DelegateAssignment:
    """Incremental assignment of stream points to the slots of a generalized solution.

    Pair ``j`` needs ``need[j]`` distinct points within ``reach[j]`` of its
    center; one slot is reserved for the center itself.  A point that cannot
    be placed, even by re-routing earlier points along an augmenting path, is
    dropped: a point not needed now is never needed later.
    """

    def __init__(self, centers: PointSet, need: np.ndarray, reach: np.ndarray):
        self.need = need
        self.reach = reach
        self.own = {int(pid): j for j, pid in enumerate(centers.ids)}
        self.seen = [False] * len(need)
        self.held: list[list[int]] = [[] for _ in need]
        self.options: dict[int, np.ndarray] = {}
        self.dist: dict[int, float] = {}
        self.where: dict[int, int] = {}
        self._row: dict[int, np.ndarray] = {}

    def _free(self, j: int) -> bool:
        # a non-center may not take the slot kept for a center still to come
        return self.need[j] - len(self.held[j]) - (0 if self.seen[j] else 1) > 0

    def offer(self, pos: int, pid: int, dists: np.ndarray) -> None:
        if pid in self.own:
            j = self.own[pid]
            self.seen[j] = True
            self._move(pos, j, dists)
            return
        options = np.flatnonzero(dists <= self.reach)
        if len(options) == 0:
            return
        self.options[pos] = options
        self._row[pos] = dists
        path = self._augment(pos, set())
        for p, j in path or ():
            self._move(p, j, self._row[p])

    def _move(self, pos: int, j: int, dists: np.ndarray) -> None:
        old = self.where.get(pos)
        if old is not None:
            self.held[old].remove(pos)
        self.held[j].append(pos)
        self.where[pos] = j
        self.dist[pos] = float(dists[j])

    def _augment(self, pos: int, visited: set[int]):
        """Pairs tried in order: a free slot first, else displace a held non-center."""
        for j in self.options[pos]:
            j = int(j)
            if j not in visited and self._free(j):
                return [(pos, j)]
        for j in self.options[pos]:
            j = int(j)
            if j in visited:
                continue
            visited.add(j)
            for q in list(self.held[j]):
                if q in self.options:
                    tail = self._augment(q, visited)
                    if tail:
                        return tail + [(pos, j)]
        return None


def smm_gen_two_pass(stream_pass1: PointSet | Iterable[Point], stream_pass2: PointSet | Iterable[Point],
                     kind: DiversityKind, params: StreamParams, metric: MetricSpace) -> Solution:
    """Two passes: a generalized core-set and its solution, then real points standing in for replicas.

    ``meta`` reports the generalized solution, its diversity, the largest
    distance between a chosen point and its pair (``delta``), the kernel
    range, and the slack of the instantiation bound.
    """
    kind = DiversityKind.parse(kind)
    if kind not in GENERALIZED_KINDS:
        raise ValueError(f"{kind.label} has no generalized streaming algorithm")
    S1 = _as_pointset(stream_pass1)
    k = params.k
    if k < 2 or k > len(S1):
        raise ValueError(f"need 2 <= k <= stream length, got k={k}, n={len(S1)}")
    kprime = params.resolve("smm_ext", len(S1))
    state = run_stream(S1, k, kprime, metric, COUNTS)
    kernel_pos, counts, radii = state.generalized()
    T = GeneralizedCoreset(S1.take(kernel_pos), counts)
    chosen = solve_generalized(kind, T, k, metric)
    cidx = T.points.positions(chosen.points.ids)
    reach = np.asarray(radii)[cidx]

    S2 = _as_pointset(stream_pass2)
    if len(S2) != len(S1):
        raise ConsistencyError(f"pass 1 saw {len(S1)} points, pass 2 sees {len(S2)}")
    inst = DelegateAssignment(chosen.points, chosen.multiplicities, reach)
    kernel = CenterBuffer(metric, max(S1.dim, 1), len(kernel_pos))
    for p in kernel_pos:
        kernel.append(stream_vector(S1, p))
    centers = CenterBuffer(metric, max(S1.dim, 1), chosen.s)
    for j in range(chosen.s):
        centers.append(stream_vector(chosen.points, j))
    kernel_ids = set(T.points.ids.tolist())
    rng = 0.0
    for i in range(len(S2)):
        x = stream_vector(S2, i)
        if int(S2.ids[i]) not in kernel_ids:
            rng = max(rng, float(kernel.dists(x).min()))
        inst.offer(i, int(S2.ids[i]), centers.dists(x))
    short = [j for j in range(chosen.s) if len(inst.held[j]) < chosen.multiplicities[j]]
    if short:
        if not all(inst.seen):
            raise ConsistencyError("pass 2 does not contain every kernel point of pass 1")
        raise InvariantError(f"pairs {short} could not be instantiated")
    picks = [p for j in range(chosen.s) for p in sorted(inst.held[j])]
    delta = max((inst.dist[p] for p in picks), default=0.0)
    points = S2.take(picks)
    value = evaluate(kind, points, metric)
    gvalue = gendiv(kind, chosen, metric)
    bound = gvalue - kind.f(k) * 2.0 * delta
    slack = value.value - bound
    if value.exact and slack < -BOUND_TOL * max(1.0, abs(gvalue)):
        raise InvariantError(f"instantiation value {value.value} below bound {bound}")
    meta = {"generalized": chosen, "gendiv": gvalue, "delta": delta, "kernel_range": rng,
            "coreset": T, "kprime": kprime, "bound_slack": slack}
    return Solution(points, value, kind, kind.alpha, meta)
