"""Synthetic sphere datasets and plain-text vector files.

Dense files hold one point per line as whitespace-separated decimals.  Sparse
files hold one point per line as ``index:count`` tokens.  Files ending in
``.gz`` are compressed and decompressed transparently.

Random numbers come from numpy's PCG64 generator seeded with the dataset
seed, so a dataset is reproducible across platforms.

Triplet data such as the musiXmatch ``track_id,word_idx,count`` lists can be
converted to the sparse format with::

    awk -F, '$1!=p{if(p)print s; s=""; p=$1} {s=s" "$2":"$3} END{print s}' triplets.txt
"""

from __future__ import annotations

import gzip
import os
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ShapeError
from .metric import PointSet

SPARSE_MIN_ENTRIES = 10


@dataclass(frozen=True)
class DatasetSpec:
    """``k_planted`` points on the unit sphere, the rest uniform in a ball of radius ``inner_radius``."""

    n: int
    k_planted: int
    dim: int
    seed: int = 0
    inner_radius: float = 0.8

    def __post_init__(self):
        if self.n < 0 or self.k_planted < 0:
            raise ValueError("n and k_planted must be non-negative")
        if self.k_planted > self.n:
            raise ValueError(f"k_planted={self.k_planted} exceeds n={self.n}")
        if self.dim < 1:
            raise ValueError(f"dim must be at least 1, got {self.dim}")
        if not 0 < self.inner_radius < 1:
            raise ValueError(f"inner_radius must lie in (0, 1), got {self.inner_radius}")


def _directions(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    out = rng.standard_normal((count, dim))
    norms = np.linalg.norm(out, axis=1)
    # a zero draw has probability 0; redraw rather than divide by it
    while np.any(norms == 0):
        bad = norms == 0
        out[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(out, axis=1)
    return out / norms[:, None]


def gen_sphere(spec: DatasetSpec) -> PointSet:
    """Planted far points hidden among a dense inner ball, shuffled; ids are ``0..n-1``."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    planted = _directions(rng, spec.k_planted, spec.dim)
    inner_n = spec.n - spec.k_planted
    radii = spec.inner_radius * rng.random(inner_n) ** (1.0 / spec.dim)
    inner = _directions(rng, inner_n, spec.dim) * radii[:, None]
    X = np.vstack([planted, inner]) if spec.n else np.zeros((0, spec.dim))
    return PointSet.from_array(X[rng.permutation(spec.n)])


def _open(path, mode: str):
    path = os.fspath(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="ascii")
    return open(path, mode, encoding="ascii")


def load_dense(path) -> PointSet:
    """One point per line; blank lines and lines starting with ``#`` are skipped."""
    rows = []
    dim = None
    with _open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                row = [float(tok) for tok in text.split()]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if dim is None:
                dim = len(row)
            elif len(row) != dim:
                raise ShapeError(f"line {lineno}: expected {dim} values, found {len(row)}")
            rows.append(row)
    if not rows:
        return PointSet.from_array(np.zeros((0, 1)))
    return PointSet.from_array(np.asarray(rows))


def load_sparse(path, min_entries: int = SPARSE_MIN_ENTRIES) -> PointSet:
    """``index:count`` tokens per line; points with fewer than ``min_entries`` entries are dropped.

    Ids are the 0-based line numbers of the kept points among non-blank lines.
    """
    rows, ids = [], []
    seen = 0
    with _open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            row = {}
            for tok in text.split():
                key, sep, val = tok.partition(":")
                try:
                    if not sep:
                        raise ValueError(f"token {tok!r} is not index:count")
                    index, count = int(key), float(val)
                except ValueError as exc:
                    raise ParseError(str(exc), lineno) from None
                if index < 0:
                    raise ParseError(f"negative index {index}", lineno)
                if count <= 0:
                    raise ParseError(f"non-positive count {val}", lineno)
                if index in row:
                    raise ParseError(f"index {index} repeated", lineno)
                row[index] = count
            if len(row) >= min_entries and row:
                rows.append(row)
                ids.append(seen)
            seen += 1
    return PointSet.from_sparse(rows, ids=np.asarray(ids, dtype=np.int64))


def save_dense(S: PointSet, path) -> None:
    with _open(path, "w") as fh:
        for row in S.dense:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def save_sparse(S: PointSet, path) -> None:
    mat = S.sparse
    with _open(path, "w") as fh:
        for i in range(len(S)):
            lo, hi = mat.indptr[i], mat.indptr[i + 1]
            fh.write(" ".join(f"{j}:{v:.17g}" for j, v in zip(mat.indices[lo:hi], mat.data[lo:hi])) + "\n")


def load(path, sparse: bool = False, min_entries: int = SPARSE_MIN_ENTRIES) -> PointSet:
    return load_sparse(path, min_entries) if sparse else load_dense(path)
