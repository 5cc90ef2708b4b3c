"""Points, point sets and the two distance functions (Euclidean, cosine).

Every algorithm in the package works on a :class:`PointSet` and refers to
points by *position* inside that set; the stable identity of a point is its
``id``.  Dense sets hold a float64 matrix, sparse sets a CSR matrix (rows are
word-count style vectors).

Cosine distance is the angle ``arccos(u.v / |u||v|)`` in ``[0, pi]``.  For
dense data it is evaluated through the half-angle chord formula, which is the
same quantity but keeps identical directions at exactly 0 and stays accurate
near 0 and pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .errors import DomainError, ShapeError

EUCLIDEAN = "euclidean"
COSINE = "cosine"
_KINDS = (EUCLIDEAN, COSINE)
# up to this dimension, one-to-all distances are summed column by column (much faster for narrow rows)
COLUMN_SCAN_MAX_DIM = 16

# relative squared-distance level under which sparse results are recomputed exactly
_CANCEL = 1e-10


@dataclass(frozen=True, eq=False)
class Point:
    """An identified vector, dense (1-D array) or sparse (index -> positive count)."""

    id: int
    coords: np.ndarray | Mapping[int, float]
    norm: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.coords, Mapping):
            if not self.coords:
                raise ValueError(f"sparse point {self.id} has no entries")
            items = sorted((int(k), float(v)) for k, v in self.coords.items())
            if any(v <= 0 for _, v in items):
                raise ValueError(f"sparse point {self.id} has non-positive counts")
            coords = MappingProxyType(dict(items))
            norm = math.sqrt(sum(v * v for _, v in items))
        else:
            coords = np.array(self.coords, dtype=np.float64)
            if coords.ndim != 1:
                raise ShapeError(f"dense point {self.id} must be a 1-D vector")
            coords.setflags(write=False)
            norm = float(np.sqrt(coords @ coords))
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "norm", norm)

    @property
    def is_sparse(self) -> bool:
        return not isinstance(self.coords, np.ndarray)

    def __repr__(self):
        if self.is_sparse:
            return f"Point(id={self.id}, nnz={len(self.coords)})"
        return f"Point(id={self.id}, coords={self.coords.tolist()})"


class PointSet:
    """An ordered, immutable collection of points sharing one representation.

    Build with :meth:`from_array`, :meth:`from_points`, :meth:`from_sparse` or
    :meth:`line` (1-D convenience).  ``len(S)``, ``S[i]`` (a :class:`Point`) and
    ``S.take(positions)`` behave like a sequence.
    """

    def __init__(self, ids: np.ndarray, dense: np.ndarray | None = None,
                 sparse: sp.csr_matrix | None = None):
        if (dense is None) == (sparse is None):
            raise ValueError("exactly one of dense/sparse must be given")
        self.ids = np.asarray(ids, dtype=np.int64)
        self.ids.setflags(write=False)
        if dense is not None:
            dense = np.ascontiguousarray(dense, dtype=np.float64)
            if dense.ndim != 2 or dense.shape[0] != len(self.ids):
                raise ShapeError("dense data must be an (n, dim) matrix matching ids")
            dense.setflags(write=False)
            self.norms = np.sqrt(np.einsum("ij,ij->i", dense, dense))
        else:
            sparse = sp.csr_matrix(sparse, dtype=np.float64)
            sparse.sort_indices()
            if sparse.shape[0] != len(self.ids):
                raise ShapeError("sparse data rows must match ids")
            self.norms = np.sqrt(np.asarray(sparse.multiply(sparse).sum(axis=1)).ravel())
        self.norms.setflags(write=False)
        self.dense = dense
        self.sparse = sparse
        self._unit = None
        self._cols = None
        self._unit_cols = None
        self._pos = None

    # construction -----------------------------------------------------------

    @classmethod
    def from_array(cls, X, ids=None) -> "PointSet":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if ids is None:
            ids = np.arange(X.shape[0])
        return cls(np.asarray(ids), dense=X)

    @classmethod
    def line(cls, values: Sequence[float], ids=None) -> "PointSet":
        """Points on the real line, handy for hand-traceable examples."""
        return cls.from_array(np.asarray(values, dtype=np.float64)[:, None], ids)

    @classmethod
    def from_sparse(cls, rows: Sequence[Mapping[int, float]], ids=None,
                    dim: int | None = None) -> "PointSet":
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for r, row in enumerate(rows):
            if not row:
                raise ValueError(f"sparse row {r} has no entries")
            for k in sorted(row):
                v = float(row[k])
                if v <= 0:
                    raise ValueError(f"sparse row {r} has non-positive count at {k}")
                indices.append(int(k))
                data.append(v)
            indptr.append(len(indices))
        if dim is None:
            dim = (max(indices) + 1) if indices else 0
        mat = sp.csr_matrix((np.asarray(data, dtype=np.float64),
                             np.asarray(indices, dtype=np.int64),
                             np.asarray(indptr, dtype=np.int64)),
                            shape=(len(rows), dim))
        if ids is None:
            ids = np.arange(len(rows))
        return cls(np.asarray(ids), sparse=mat)

    @classmethod
    def from_points(cls, points: Iterable[Point]) -> "PointSet":
        points = list(points)
        if not points:
            return cls(np.zeros(0, dtype=np.int64), dense=np.zeros((0, 0)))
        ids = [p.id for p in points]
        if points[0].is_sparse:
            if not all(p.is_sparse for p in points):
                raise ShapeError("cannot mix sparse and dense points")
            return cls.from_sparse([p.coords for p in points], ids)
        dims = {p.coords.shape[0] for p in points}
        if len(dims) != 1:
            raise ShapeError(f"dense points have mixed dimensions {sorted(dims)}")
        return cls(np.asarray(ids), dense=np.vstack([p.coords for p in points]))

    @classmethod
    def concat(cls, sets: Sequence["PointSet"]) -> "PointSet":
        sets = [s for s in sets if len(s)] or list(sets[:1])
        if len(sets) == 1:
            return sets[0]
        ids = np.concatenate([s.ids for s in sets])
        if sets[0].is_sparse:
            dim = max(s.dim for s in sets)
            mats = [s.sparse if s.dim == dim else _pad_cols(s.sparse, dim) for s in sets]
            return cls(ids, sparse=sp.vstack(mats, format="csr"))
        return cls(ids, dense=np.vstack([s.dense for s in sets]))

    # sequence protocol ------------------------------------------------------

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, i: int) -> Point:
        i = int(i)
        if self.dense is not None:
            return Point(int(self.ids[i]), self.dense[i])
        row = self.sparse.getrow(i)
        return Point(int(self.ids[i]), dict(zip(row.indices.tolist(), row.data.tolist())))

    def __iter__(self) -> Iterator[Point]:
        return (self[i] for i in range(len(self)))

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"PointSet(n={len(self)}, dim={self.dim}, {kind})"

    @property
    def is_sparse(self) -> bool:
        return self.sparse is not None

    @property
    def dim(self) -> int:
        return (self.sparse if self.is_sparse else self.dense).shape[1]

    def take(self, positions) -> "PointSet":
        positions = np.asarray(positions, dtype=np.int64)
        if self.is_sparse:
            return PointSet(self.ids[positions], sparse=self.sparse[positions])
        return PointSet(self.ids[positions], dense=self.dense[positions])

    def positions(self, ids) -> np.ndarray:
        """Map point ids to positions; raises KeyError for unknown ids."""
        if self._pos is None:
            self._pos = {int(v): i for i, v in enumerate(self.ids.tolist())}
        return np.asarray([self._pos[int(v)] for v in np.asarray(ids).ravel()], dtype=np.int64)

    def id_set(self) -> set[int]:
        return set(self.ids.tolist())

    def unit(self):
        """Rows scaled to unit norm (cosine work); raises DomainError on a zero row."""
        if self._unit is None:
            if len(self) and np.any(self.norms == 0):
                bad = int(self.ids[np.flatnonzero(self.norms == 0)[0]])
                raise DomainError(f"point {bad} is the zero vector; cosine distance undefined")
            inv = 1.0 / np.where(self.norms == 0, 1.0, self.norms)
            if self.is_sparse:
                self._unit = sp.csr_matrix(sp.diags(inv) @ self.sparse)
            else:
                self._unit = self.dense * inv[:, None]
        return self._unit

    def columns(self, unit: bool = False) -> np.ndarray:
        """Column-major copy of the dense rows (or of the unit rows), cached."""
        if unit:
            if self._unit_cols is None:
                self._unit_cols = np.ascontiguousarray(self.unit().T)
            return self._unit_cols
        if self._cols is None:
            self._cols = np.ascontiguousarray(self.dense.T)
        return self._cols


def _norm_by_columns(cols: np.ndarray, x: np.ndarray, sign: float = -1.0) -> np.ndarray:
    # |row + sign * x| for every row, accumulated one coordinate at a time
    acc = np.square(cols[0] + sign * x[0])
    for j in range(1, len(x)):
        t = cols[j] + sign * x[j]
        t *= t
        acc += t
    return np.sqrt(acc, out=acc)


def _pad_cols(mat: sp.csr_matrix, dim: int) -> sp.csr_matrix:
    mat = mat.copy()
    mat.resize((mat.shape[0], dim))
    return mat


def _angle_from_chords(minus: np.ndarray, plus: np.ndarray) -> np.ndarray:
    # minus = |u - v|, plus = |u + v| for unit u, v
    a = 2.0 * np.arcsin(np.clip(minus / 2.0, 0.0, 1.0))
    b = np.pi - 2.0 * np.arcsin(np.clip(plus / 2.0, 0.0, 1.0))
    return np.where(minus <= plus, a, b)


@dataclass(frozen=True)
class MetricSpace:
    """Distance-function selector: ``"euclidean"`` or ``"cosine"``.

    Both kinds are metrics on their domain (cosine: nonzero vectors taken
    up to positive scaling).  All methods are pure.
    """

    kind: str = EUCLIDEAN

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown metric {self.kind!r}; expected one of {_KINDS}")

    # single pair ------------------------------------------------------------

    def distance(self, p: Point, q: Point) -> float:
        if p.is_sparse != q.is_sparse:
            raise ShapeError("cannot compare a sparse point with a dense one")
        if self.kind == COSINE and (p.norm == 0 or q.norm == 0):
            raise DomainError("cosine distance is undefined for the zero vector")
        if not p.is_sparse:
            if p.coords.shape != q.coords.shape:
                raise ShapeError(f"dimension mismatch {p.coords.shape[0]} vs {q.coords.shape[0]}")
            if self.kind == EUCLIDEAN:
                diff = p.coords - q.coords
                return float(np.sqrt(diff @ diff))
            u = p.coords / p.norm
            v = q.coords / q.norm
            minus, plus = u - v, u + v
            return float(_angle_from_chords(np.sqrt(minus @ minus), np.sqrt(plus @ plus)))
        a, b = p.coords, q.coords
        if self.kind == EUCLIDEAN:
            total = 0.0
            for key in a.keys() | b.keys():
                d = a.get(key, 0.0) - b.get(key, 0.0)
                total += d * d
            return math.sqrt(total)
        if a == b:
            return 0.0
        small, large = (a, b) if len(a) <= len(b) else (b, a)
        dot = sum(v * large.get(key, 0.0) for key, v in small.items())
        return math.acos(min(1.0, max(-1.0, dot / (p.norm * q.norm))))

    # bulk -------------------------------------------------------------------

    def dists(self, S: PointSet, i: int, idx=None) -> np.ndarray:
        """Distances from row ``i`` of ``S`` to rows ``idx`` (default: all rows)."""
        return self.dists_between(S, idx, S, i)

    def dists_between(self, S: PointSet, idx, T: PointSet, j: int) -> np.ndarray:
        """Distances from row ``j`` of ``T`` to rows ``idx`` of ``S``."""
        _check_compatible(S, T)
        if S.is_sparse:
            rows = S.sparse if idx is None else S.sparse[np.asarray(idx)]
            norms = S.norms if idx is None else S.norms[np.asarray(idx)]
            return self._sparse_block(rows, norms, T.sparse[j], T.norms[j])
        narrow = idx is None and 0 < S.dim <= COLUMN_SCAN_MAX_DIM
        if self.kind == EUCLIDEAN:
            if narrow:
                return _norm_by_columns(S.columns(), T.dense[j])
            X = S.dense if idx is None else S.dense[idx]
            diff = X - T.dense[j]
            return np.sqrt(np.einsum("ij,ij->i", diff, diff))
        u = T.unit()[j]
        if narrow:
            cols = S.columns(unit=True)
            return _angle_from_chords(_norm_by_columns(cols, u), _norm_by_columns(cols, u, 1.0))
        U = S.unit() if idx is None else S.unit()[idx]
        minus, plus = U - u, U + u
        return _angle_from_chords(np.sqrt(np.einsum("ij,ij->i", minus, minus)),
                                  np.sqrt(np.einsum("ij,ij->i", plus, plus)))

    def cross(self, A: PointSet, B: PointSet) -> np.ndarray:
        """Full ``len(A) x len(B)`` distance matrix."""
        _check_compatible(A, B)
        if len(A) == 0 or len(B) == 0:
            return np.zeros((len(A), len(B)))
        if A.is_sparse:
            return np.vstack([self._sparse_block(B.sparse, B.norms, A.sparse[i], A.norms[i])
                              for i in range(len(A))])
        if self.kind == EUCLIDEAN:
            return cdist(A.dense, B.dense)
        UA, UB = A.unit(), B.unit()
        return _angle_from_chords(cdist(UA, UB), cdist(UA, -UB))

    def pairwise(self, S: PointSet) -> np.ndarray:
        D = self.cross(S, S)
        D = np.minimum(D, D.T)  # exact symmetry
        np.fill_diagonal(D, 0.0)
        return D

    def _sparse_block(self, rows: sp.csr_matrix, norms: np.ndarray,
                      x: sp.csr_matrix, xnorm: float) -> np.ndarray:
        dots = np.asarray((rows @ x.T).todense()).ravel()
        if self.kind == COSINE:
            if xnorm == 0 or np.any(norms == 0):
                raise DomainError("cosine distance is undefined for the zero vector")
            cos = dots / (norms * xnorm)
            out = np.arccos(np.clip(cos, -1.0, 1.0))
            near = np.flatnonzero(cos > 1.0 - _CANCEL)
            for r in near:
                diff = rows[r] / norms[r] - x / xnorm
                chord = math.sqrt(diff.multiply(diff).sum())
                out[r] = 2.0 * math.asin(min(1.0, chord / 2.0))
            return out
        sq = norms ** 2 + xnorm ** 2 - 2.0 * dots
        out = np.sqrt(np.maximum(sq, 0.0))
        near = np.flatnonzero(sq <= _CANCEL * (norms ** 2 + xnorm ** 2))
        for r in near:
            diff = rows[r] - x
            out[r] = math.sqrt(diff.multiply(diff).sum())
        return out


def _check_compatible(A: PointSet, B: PointSet) -> None:
    if A.is_sparse != B.is_sparse:
        raise ShapeError("cannot compare sparse and dense point sets")
    if not A.is_sparse and len(A) and len(B) and A.dim != B.dim:
        raise ShapeError(f"dimension mismatch {A.dim} vs {B.dim}")


def set_distance(p: Point, S: PointSet | Iterable[Point], metric: MetricSpace) -> float:
    """``d(p, S) = min_{q in S} d(p, q)``."""
    if not isinstance(S, PointSet):
        S = PointSet.from_points(S)
    if len(S) == 0:
        raise ValueError("set_distance needs a nonempty set")
    single = PointSet.from_points([p])
    return float(metric.dists_between(S, None, single, 0).min())


def distance(p: Point, q: Point, metric: MetricSpace) -> float:
    return metric.distance(p, q)


def argmax_by_id(values: np.ndarray, ids: np.ndarray) -> int:
    """Position of the maximum of ``values``; ties go to the smallest id."""
    top = values.max()
    cand = np.flatnonzero(values == top)
    if len(cand) == 1:
        return int(cand[0])
    return int(cand[np.argmin(ids[cand])])


def argmin_by_id(values: np.ndarray, ids: np.ndarray) -> int:
    low = values.min()
    cand = np.flatnonzero(values == low)
    if len(cand) == 1:
        return int(cand[0])
    return int(cand[np.argmin(ids[cand])])


class CenterBuffer:
    """Fixed-capacity store of center vectors with distance-to-all queries.

    Used by the streaming kernels: centers are kept densely (normalized for
    cosine) so that one query costs a single vectorized pass over at most
    ``capacity`` rows.
    """

    def __init__(self, metric: MetricSpace, dim: int, capacity: int):
        self.metric = metric
        self.size = 0
        self.block = np.zeros((capacity, dim))
        self.sq = np.zeros(capacity)

    def _vector(self, x) -> tuple[np.ndarray | None, tuple | None, float]:
        # x is (dense row) or (indices, values) for sparse input
        if isinstance(x, tuple):
            idx, vals = x
            norm = math.sqrt(float(vals @ vals))
            if self.metric.kind == COSINE:
                if norm == 0:
                    raise DomainError("cosine distance is undefined for the zero vector")
                return None, (idx, vals / norm), 1.0
            return None, (idx, vals), norm
        if self.metric.kind == COSINE:
            norm = math.sqrt(float(x @ x))
            if norm == 0:
                raise DomainError("cosine distance is undefined for the zero vector")
            return x / norm, None, 1.0
        return x, None, 0.0

    def dists(self, x) -> np.ndarray:
        block = self.block[: self.size]
        dense, sparse, norm = self._vector(x)
        if dense is not None:
            if self.metric.kind == EUCLIDEAN:
                diff = block - dense
                return np.sqrt(np.einsum("ij,ij->i", diff, diff))
            minus, plus = block - dense, block + dense
            return _angle_from_chords(np.sqrt(np.einsum("ij,ij->i", minus, minus)),
                                      np.sqrt(np.einsum("ij,ij->i", plus, plus)))
        idx, vals = sparse
        dots = block[:, idx] @ vals
        if self.metric.kind == COSINE:
            out = np.arccos(np.clip(dots, -1.0, 1.0))
            for r in np.flatnonzero(dots > 1.0 - _CANCEL):
                row = block[r].copy()
                row[idx] -= vals
                out[r] = 2.0 * math.asin(min(1.0, math.sqrt(float(row @ row)) / 2.0))
            return out
        sq = self.sq[: self.size] + norm * norm - 2.0 * dots
        out = np.sqrt(np.maximum(sq, 0.0))
        near = np.flatnonzero(sq <= _CANCEL * (self.sq[: self.size] + norm * norm))
        for r in near:
            row = block[r].copy()
            row[idx] -= vals
            out[r] = math.sqrt(float(row @ row))
        return out

    def pairwise(self) -> np.ndarray:
        """Distances among the stored centers."""
        block = self.block[: self.size]
        if self.metric.kind == EUCLIDEAN:
            D = cdist(block, block)
        else:
            D = _angle_from_chords(cdist(block, block), cdist(block, -block))
        D = np.minimum(D, D.T)
        np.fill_diagonal(D, 0.0)
        return D

    def append(self, x) -> None:
        dense, sparse, _ = self._vector(x)
        row = self.block[self.size]
        if dense is not None:
            row[:] = dense
        else:
            row[:] = 0.0
            row[sparse[0]] = sparse[1]
        self.sq[self.size] = row @ row
        self.size += 1

    def keep(self, mask: np.ndarray) -> None:
        """Retain only the rows selected by ``mask`` (order preserved)."""
        kept = np.flatnonzero(mask)
        self.block[: len(kept)] = self.block[kept]
        self.sq[: len(kept)] = self.sq[kept]
        self.size = len(kept)


def stream_vector(S: PointSet, i: int):
    """Row ``i`` in the form :class:`CenterBuffer` consumes."""
    if S.is_sparse:
        lo, hi = S.sparse.indptr[i], S.sparse.indptr[i + 1]
        return (S.sparse.indices[lo:hi], S.sparse.data[lo:hi])
    return S.dense[i]
