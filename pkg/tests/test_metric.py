import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from divmax.errors import DomainError, ShapeError
from divmax.metric import CenterBuffer, MetricSpace, Point, PointSet, distance, set_distance, stream_vector

from instances import METRICS, rng

EUC = MetricSpace("euclidean")
COS = MetricSpace("cosine")


def test_euclidean_345():
    assert distance(Point(0, [0, 0]), Point(1, [3, 4]), EUC) == 5.0


def test_cosine_examples():
    assert distance(Point(0, [1, 0]), Point(1, [1, 0]), COS) == 0.0
    assert distance(Point(0, [1, 0]), Point(1, [0, 1]), COS) == pytest.approx(math.pi / 2, abs=1e-12)
    assert distance(Point(0, [1, 0]), Point(1, [-1, 0]), COS) == pytest.approx(math.pi, abs=1e-12)


def test_cosine_of_scaled_vectors_is_zero():
    # the angle ignores length, so distinct coordinates can be at distance 0
    assert distance(Point(0, [1, 2]), Point(1, [2, 4]), COS) == 0.0


def test_cosine_zero_vector_is_a_domain_error():
    with pytest.raises(DomainError):
        distance(Point(0, [0, 0]), Point(1, [1, 0]), COS)
    with pytest.raises(DomainError):
        COS.pairwise(PointSet.from_array([[0.0, 0.0], [1.0, 0.0]]))


def test_dimension_mismatch_is_a_shape_error():
    with pytest.raises(ShapeError):
        distance(Point(0, [0, 0]), Point(1, [0, 0, 0]), EUC)


def test_unknown_metric_rejected():
    with pytest.raises(ValueError):
        MetricSpace("manhattan")


def test_sparse_points_need_positive_counts():
    with pytest.raises(ValueError):
        Point(0, {1: 0.0})
    with pytest.raises(ValueError):
        Point(0, {})


def test_set_distance_examples():
    S = PointSet.line([0, 10])
    assert set_distance(Point(9, [7.0]), S, EUC) == 3.0
    assert set_distance(S[0], S, EUC) == 0.0
    assert set_distance(Point(9, [4.0]), PointSet.line([1]), EUC) == 3.0
    with pytest.raises(ValueError):
        set_distance(Point(9, [4.0]), [], EUC)


@pytest.mark.parametrize("metric", METRICS, ids=lambda m: m.kind)
def test_triangle_inequality_and_symmetry_on_random_triples(metric):
    gen = rng(11)
    X = gen.normal(size=(3 * 10_000, 4)) * gen.exponential(size=(3 * 10_000, 1))
    S = PointSet.from_array(X)
    a, b, c = np.arange(0, len(S), 3), np.arange(1, len(S), 3), np.arange(2, len(S), 3)
    ab = np.array([metric.distance(S[i], S[j]) for i, j in zip(a, b)])
    ba = np.array([metric.distance(S[j], S[i]) for i, j in zip(a, b)])
    bc = np.array([metric.distance(S[i], S[j]) for i, j in zip(b, c)])
    ac = np.array([metric.distance(S[i], S[j]) for i, j in zip(a, c)])
    assert np.array_equal(ab, ba)
    assert np.all(ac <= ab + bc + 1e-9)
    assert np.all(ab >= 0)


@pytest.mark.parametrize("metric", METRICS, ids=lambda m: m.kind)
def test_bulk_paths_agree_with_pointwise(metric):
    gen = rng(5)
    S = PointSet.from_array(gen.normal(size=(30, 5)))
    D = metric.pairwise(S)
    ref = np.array([[metric.distance(p, q) for q in S] for p in S])
    assert np.allclose(D, ref, atol=1e-12)
    assert np.array_equal(D, D.T)
    assert np.allclose(metric.dists(S, 3), ref[3], atol=1e-12)


@pytest.mark.parametrize("metric", METRICS, ids=lambda m: m.kind)
def test_sparse_matches_dense(metric):
    gen = rng(8)
    X = gen.integers(0, 3, size=(25, 12)).astype(float)
    X[:, 0] += 1.0  # every row needs an entry
    X[7] = X[3]  # exact duplicate
    rows = [{j: v for j, v in enumerate(r) if v > 0} for r in X]
    sparse = PointSet.from_sparse(rows, dim=12)
    dense = PointSet.from_array(X)
    assert np.allclose(metric.pairwise(sparse), metric.pairwise(dense), atol=1e-9)
    assert metric.pairwise(sparse)[3, 7] == 0.0
    assert metric.distance(sparse[3], sparse[7]) == 0.0
    p, q = sparse[1], sparse[2]
    assert metric.distance(p, q) == pytest.approx(metric.distance(dense[1], dense[2]), abs=1e-12)


@pytest.mark.parametrize("metric", METRICS, ids=lambda m: m.kind)
@pytest.mark.parametrize("sparse", [False, True])
def test_center_buffer_matches_metric(metric, sparse):
    gen = rng(2)
    X = gen.integers(0, 4, size=(40, 9)).astype(float)
    X[:, 2] += 1.0
    S = (PointSet.from_sparse([{j: v for j, v in enumerate(r) if v > 0} for r in X], dim=9)
         if sparse else PointSet.from_array(X))
    buf = CenterBuffer(metric, S.dim, 10)
    for i in range(10):
        buf.append(stream_vector(S, i))
    for i in range(40):
        assert np.allclose(buf.dists(stream_vector(S, i)), metric.dists(S, i, np.arange(10)), atol=1e-9)
    assert np.allclose(buf.pairwise(), metric.pairwise(S.take(range(10))), atol=1e-9)
    buf.keep(np.arange(10) % 2 == 0)
    assert np.allclose(buf.dists(stream_vector(S, 0)), metric.dists(S, 0, np.arange(0, 10, 2)), atol=1e-9)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=6), st.floats(-1e3, 1e3))
def test_set_distance_of_member_is_zero(values, extra):
    S = PointSet.line(values + [extra])
    for i in range(len(S)):
        assert set_distance(S[i], S, EUC) == 0.0


def test_pointset_basics():
    S = PointSet.line([3.0, 1.0, 2.0], ids=[10, 20, 30])
    assert len(S) == 3 and S.dim == 1 and not S.is_sparse
    assert S.positions([30, 10]).tolist() == [2, 0]
    assert [p.id for p in S.take([2, 0])] == [30, 10]
    both = PointSet.concat([S.take([0]), S.take([2])])
    assert both.ids.tolist() == [10, 30]
    assert PointSet.from_points(list(S)).ids.tolist() == [10, 20, 30]
    with pytest.raises(ValueError):
        S.dense[0, 0] = 5.0
