import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from divmax.diversity import DiversityKind, evaluate
from divmax.kcenter import GeneralizedCoreset
from divmax.metric import MetricSpace, PointSet
from divmax.oracle import brute_force, brute_force_generalized
from divmax.seqsolve import gendiv, solve_generalized, solve_sequential

from instances import METRICS, cloud, rng

EUC = MetricSpace("euclidean")
L = PointSet.line
K = DiversityKind
G = GeneralizedCoreset


def test_sequential_examples():
    S = L([0, 1, 2, 9, 10])
    sol = solve_sequential(K.REMOTE_EDGE, S, 2, EUC)
    assert sol.value.value == 10 and sorted(sol.points.dense[:, 0]) == [0, 10]
    sol = solve_sequential(K.REMOTE_CLIQUE, S, 2, EUC)
    assert sol.value.value == 10 and sorted(sol.points.dense[:, 0]) == [0, 10]
    full = solve_sequential(K.REMOTE_CLIQUE, S, 5, EUC)
    assert full.value.value == evaluate(K.REMOTE_CLIQUE, S, EUC).value
    assert sol.alpha == 2 and sol.kind is K.REMOTE_CLIQUE


def test_sequential_errors():
    with pytest.raises(ValueError):
        solve_sequential(K.REMOTE_EDGE, L([0, 1]), 3, EUC)
    with pytest.raises(ValueError):
        solve_sequential(K.REMOTE_EDGE, L([0, 1]), 1, EUC)


def test_solution_value_is_evaluation_of_points():
    gen = rng(1)
    S = PointSet.from_array(gen.normal(size=(30, 2)))
    for kind in K:
        sol = solve_sequential(kind, S, 5, EUC)
        assert len(sol.points) == 5 and len(set(sol.points.ids.tolist())) == 5
        assert sol.value == evaluate(kind, sol.points, EUC)


def test_generalized_examples():
    T = G(L([0, 10]), [2, 2])
    out = solve_generalized(K.REMOTE_CLIQUE, T, 2, EUC)
    assert out.as_dict() == {0: 1, 1: 1} and gendiv(K.REMOTE_CLIQUE, out, EUC) == 10
    assert solve_generalized(K.REMOTE_CLIQUE, T, 4, EUC) is T
    T = G(L([0, 5]), [3, 1])
    out = solve_generalized(K.REMOTE_TREE, T, 3, EUC)
    assert out.as_dict() == {0: 2, 1: 1} and gendiv(K.REMOTE_TREE, out, EUC) == 5


def test_gendiv_examples():
    T = G(L([0, 10]), [2, 1])
    assert gendiv(K.REMOTE_CLIQUE, T, EUC) == 20
    assert gendiv(K.REMOTE_TREE, T, EUC) == 10
    assert gendiv(K.REMOTE_EDGE, T, EUC) == 0
    with pytest.raises(ValueError):
        gendiv(K.REMOTE_CLIQUE, G(L([0]), [1]), EUC)


def test_generalized_errors():
    T = G(L([0, 10]), [1, 1])
    with pytest.raises(ValueError):
        solve_generalized(K.REMOTE_CLIQUE, T, 3, EUC)
    with pytest.raises(ValueError):
        solve_generalized(K.REMOTE_EDGE, T, 2, EUC)


@pytest.mark.parametrize("metric", METRICS, ids=lambda m: m.kind)
def test_alpha_guarantee_against_oracle(metric):
    gen = rng(31)
    for _ in range(120):
        n = int(gen.integers(2, 13))
        S = cloud(gen, n, int(gen.integers(1, 4)), metric)
        k = int(gen.integers(2, min(4, n) + 1))
        for kind in K:
            if kind is K.REMOTE_CLIQUE and k % 2:
                continue
            value = solve_sequential(kind, S, k, metric).value.value
            opt = brute_force(kind, S, k, metric).value
            assert value * kind.alpha >= opt - 1e-9
            assert value <= opt + 1e-9


@pytest.mark.parametrize("metric", METRICS, ids=lambda m: m.kind)
def test_generalized_alpha_and_coherence(metric):
    gen = rng(32)
    for _ in range(80):
        s = int(gen.integers(2, 6))
        T = G(cloud(gen, s, 2, metric), gen.integers(1, 4, size=s))
        if T.m < 2:
            continue
        k = int(gen.integers(2, min(T.m, 6) + 1))
        for kind in (K.REMOTE_CLIQUE, K.REMOTE_STAR, K.REMOTE_BIPARTITION, K.REMOTE_TREE):
            out = solve_generalized(kind, T, k, metric)
            assert out.m == k and out.is_coherent_subset_of(T)
            opt = brute_force_generalized(kind, T, k, metric)[0]
            assert gendiv(kind, out, metric) * kind.alpha >= opt - 1e-9


@settings(max_examples=60)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=5, unique=True),
       st.lists(st.integers(1, 3), min_size=5, max_size=5), st.integers(0, 4), st.integers(2, 5))
def test_clique_gendiv_monotone_under_supersets(xs, mults, bump, k):
    T = G(L(xs), mults[: len(xs)])
    if T.m < k:
        return
    bigger = np.asarray(mults[: len(xs)])
    bigger[bump % len(xs)] += 1
    U = G(L(xs), bigger)
    small = brute_force_generalized(K.REMOTE_CLIQUE, T, k, EUC)[0]
    large = brute_force_generalized(K.REMOTE_CLIQUE, U, k, EUC)[0]
    assert large >= small - 1e-9
