import numpy as np
import pytest

from divmax.diversity import DiversityKind, evaluate
from divmax.errors import ConfigurationError
from divmax.kcenter import gmm, gmm_ext
from divmax.metric import MetricSpace, PointSet
from divmax.oracle import brute_force
from divmax.pipeline import (ADVERSARIAL, CONTIGUOUS, PARTITIONINGS, RANDOM, PipelineConfig,
                             RoundTrace, delegate_cap, level_epsilon, max_levels, mr_multi_round,
                             mr_randomized, mr_three_round_gen, mr_two_round, partition)
from divmax.seqsolve import solve_sequential

from instances import METRICS, cloud, rng

EUC = MetricSpace("euclidean")
L = PointSet.line
K = DiversityKind
DELEGATE_KINDS = (K.REMOTE_CLIQUE, K.REMOTE_STAR, K.REMOTE_BIPARTITION, K.REMOTE_TREE)


def values(S):
    return sorted(S.dense[:, 0].tolist())


def test_two_round_example():
    S = L([0, 1, 2, 9, 10, 11])
    sol, trace = mr_two_round(S, K.REMOTE_EDGE, PipelineConfig(2, ell=2, kprime=2), EUC)
    assert values(sol.points) == [0, 11] and sol.value.value == 11
    assert sol.value.value == brute_force(K.REMOTE_EDGE, S, 2, EUC).value
    assert trace.partition_sizes(1) == [3, 3] and trace.output_sizes(1) == [2, 2]
    assert trace.aggregate(1) == 4 == sol.meta["aggregate"]


def test_single_partition_is_sequential_on_the_coreset():
    S = PointSet.from_array(rng(60).normal(size=(80, 2)))
    for kind in K:
        sol, _ = mr_two_round(S, kind, PipelineConfig(4, kprime=10), EUC)
        core = gmm_ext(S, 4, 10, EUC) if kind.needs_delegates else gmm(S, 10, EUC).points
        ref = solve_sequential(kind, S.take(np.sort(S.positions(core.ids))), 4, EUC)
        assert sol.value.value == pytest.approx(ref.value.value, rel=1e-12)
        assert sorted(sol.points.ids.tolist()) == sorted(ref.points.ids.tolist())


def test_configuration_errors():
    S = L(range(10))
    with pytest.raises(ConfigurationError):
        mr_two_round(S, K.REMOTE_EDGE, PipelineConfig(2, ell=2, kprime=6), EUC)
    with pytest.raises(ConfigurationError):
        mr_two_round(S, K.REMOTE_EDGE, PipelineConfig(3, ell=4, kprime=3), EUC)
    with pytest.raises(ValueError):
        PipelineConfig(2, partitioning="sideways")
    with pytest.raises(ValueError):
        PipelineConfig(2, gamma=0.5)
    with pytest.raises(ValueError):
        mr_randomized(S, K.REMOTE_EDGE, PipelineConfig(2), EUC)


def test_partitionings_cover_the_input():
    X = rng(61).normal(size=(101, 3))
    S = PointSet.from_array(X)
    for scheme in PARTITIONINGS:
        parts = partition(S, PipelineConfig(2, ell=7, partitioning=scheme, seed=5))
        assert sorted(np.concatenate(parts).tolist()) == list(range(101))
        assert max(map(len, parts)) - min(map(len, parts)) <= 1
    adv = partition(S, PipelineConfig(2, ell=4, partitioning=ADVERSARIAL))
    bounds = [(X[p, 0].min(), X[p, 0].max()) for p in adv]
    assert all(bounds[i][1] <= bounds[i + 1][0] for i in range(3))
    # sparse points are ordered by a fixed projection
    sparse = PointSet.from_sparse([{0: float(abs(v)) + 1.0, 3: 1.0} for v in X[:, 0]], dim=5)
    assert len(partition(sparse, PipelineConfig(2, ell=3, partitioning=ADVERSARIAL))) == 3


def test_trace_csv():
    trace = RoundTrace()
    trace.add(1, 0, 10, 4, 1.25)
    trace.add(1, 1, 10, 3, 0.5)
    assert trace.aggregate(1) == 7
    assert trace.to_csv().splitlines() == ["round,partition,input_size,output_size,millis",
                                           "1,0,10,4,1.250", "1,1,10,3,0.500"]


@pytest.mark.parametrize("kind", list(K), ids=lambda k: k.label)
def test_aggregate_accounting(kind):
    S = PointSet.from_array(rng(62).normal(size=(600, 2)))
    cfg = PipelineConfig(4, ell=5, kprime=12, partitioning=RANDOM, seed=2)
    sol, trace = mr_two_round(S, kind, cfg, EUC)
    assert trace.aggregate(1) == sum(trace.output_sizes(1)) == sol.meta["aggregate"]
    if kind.needs_delegates:
        assert trace.aggregate(1) <= 5 * 4 * 12
    else:
        assert trace.aggregate(1) == 5 * 12
    if kind in DELEGATE_KINDS:
        gsol, gtrace = mr_three_round_gen(S, kind, cfg, EUC)
        assert gtrace.aggregate(1) == 5 * 12 == gsol.meta["aggregate"]


def test_parallel_determinism():
    S = PointSet.from_array(rng(63).normal(size=(2000, 3)))
    for run in (mr_two_round, mr_three_round_gen, mr_multi_round):
        outs = []
        for threads in (1, 2, 4):
            cfg = PipelineConfig(4, ell=8, kprime=16, partitioning=RANDOM, seed=9, threads=threads,
                                 memory=300)
            sol, _ = run(S, K.REMOTE_CLIQUE, cfg, EUC)
            outs.append((sol.points.ids.tolist(), sol.value.value))
        assert outs[0] == outs[1] == outs[2]


def test_randomized_cap():
    assert delegate_cap(10 ** 4, 64, 16) == 37
    assert delegate_cap(10 ** 4, 64, 1) == 63
    assert delegate_cap(100, 5, 1, c=0.1) == 1
    S = PointSet.from_array(rng(64).normal(size=(400, 2)))
    cfg = PipelineConfig(6, kprime=10, seed=3)
    a, _ = mr_randomized(S, K.REMOTE_CLIQUE, cfg, EUC)
    b, _ = mr_two_round(S, K.REMOTE_CLIQUE, cfg, EUC)
    assert a.points.ids.tolist() == b.points.ids.tolist()


def test_randomized_aggregate_is_smaller():
    # cap = ceil(4 * ln 20000) = 40 < k - 1 = 63
    S = PointSet.from_array(rng(65).normal(size=(20000, 2)))
    cfg = PipelineConfig(64, ell=16, kprime=4, partitioning=RANDOM, seed=1)
    rand, rt = mr_randomized(S, K.REMOTE_TREE, cfg, EUC)
    det, dt = mr_two_round(S, K.REMOTE_TREE, cfg, EUC)
    assert rand.meta["delegate_cap"] == delegate_cap(20000, 64, 16) == 40
    assert rt.aggregate(1) < dt.aggregate(1)
    assert max(rt.output_sizes(1)) <= 4 * 41


def test_multi_round_levels():
    assert max_levels(1 / 3) == 2 and max_levels(0.25) == 3
    assert level_epsilon(1.0, 2, 1 / 3) == pytest.approx(1 / 6)
    gen = rng(66)
    X = gen.uniform(-1, 1, size=(4096, 2)) * 0.1
    X[[17, 1000, 2500, 4000]] = [[50, 0], [-50, 0], [0, 50], [0, -50]]
    S = PointSet.from_array(X)
    sol, trace = mr_multi_round(S, K.REMOTE_EDGE, PipelineConfig(4, kprime=8, memory=256), EUC)
    assert 1 <= sol.meta["levels"] <= 2
    assert trace.partition_sizes(sol.meta["levels"] + 1) <= [256]
    planted = S.take([17, 1000, 2500, 4000])
    assert sol.value.value >= brute_force(K.REMOTE_EDGE, planted, 4, EUC).value / 2


def test_multi_round_single_level_matches_two_round():
    S = PointSet.from_array(rng(67).normal(size=(400, 2)))
    cfg = PipelineConfig(3, ell=4, kprime=6, memory=100)
    multi, trace = mr_multi_round(S, K.REMOTE_TREE, cfg, EUC)
    two, _ = mr_two_round(S, K.REMOTE_TREE, cfg, EUC)
    assert multi.meta["levels"] == 1
    assert multi.points.ids.tolist() == two.points.ids.tolist()


def test_multi_round_budget_too_small():
    S = PointSet.from_array(rng(68).normal(size=(5000, 2)))
    with pytest.raises(ConfigurationError, match="required"):
        mr_multi_round(S, K.REMOTE_CLIQUE, PipelineConfig(4, kprime=8, memory=40), EUC)


def test_three_round_example():
    S = L([0, 0.1, 10, 10.1])
    sol, trace = mr_three_round_gen(S, K.REMOTE_CLIQUE, PipelineConfig(2, ell=2, kprime=1), EUC)
    assert sol.meta["aggregate"] == 2 and sol.value.value >= 9.8
    assert sol.meta["generalized"].m == 2


@pytest.mark.parametrize("metric", METRICS, ids=lambda m: m.kind)
def test_three_round_instantiation_bound(metric):
    gen = rng(69)
    for trial in range(40):
        n = int(gen.integers(8, 120))
        S = cloud(gen, n, 2, metric)
        k = int(gen.integers(2, 5))
        ell = int(gen.integers(1, n // max(k, 4) + 1))
        kind = DELEGATE_KINDS[trial % 4]
        cfg = PipelineConfig(k, ell=min(ell, 4), kprime=k, partitioning=PARTITIONINGS[trial % 3], seed=trial)
        sol, trace = mr_three_round_gen(S, kind, cfg, metric)
        assert len(set(sol.points.ids.tolist())) == k
        assert sol.meta["bound_slack"] >= -1e-9 * max(1.0, abs(sol.meta["gendiv"]))
        assert sol.meta["delta"] <= sol.meta["kernel_range"] + 1e-12
        assert sum(trace.output_sizes(3)) == k


@pytest.mark.parametrize("scheme", PARTITIONINGS)
def test_strict_mode_bounds_against_oracle(scheme):
    gen = rng(70)
    eps = 0.5
    for trial in range(15):
        S = PointSet.from_array(gen.normal(size=(int(gen.integers(12, 17)), 2)))
        k = 3
        cfg = PipelineConfig(k, ell=3, partitioning=scheme, seed=trial, strict=True, epsilon=eps, D=2)
        for kind in (K.REMOTE_EDGE, K.REMOTE_CLIQUE, K.REMOTE_TREE):
            opt = brute_force(kind, S, k, EUC).value
            sol, trace = mr_two_round(S, kind, cfg, EUC)
            assert sol.value.value >= opt / (kind.alpha + eps) - 1e-9
            if kind in DELEGATE_KINDS:
                gsol, _ = mr_three_round_gen(S, kind, cfg, EUC)
                assert gsol.value.value >= opt / (kind.alpha + eps) - 1e-9


def test_randomized_statistical_bound():
    gen = rng(71)
    S = PointSet.from_array(gen.normal(size=(14, 2)))
    opt = brute_force(K.REMOTE_CLIQUE, S, 4, EUC).value
    good = 0
    for seed in range(100):
        cfg = PipelineConfig(4, ell=2, seed=seed, strict=True, epsilon=1.0, D=2)
        sol, _ = mr_randomized(S, K.REMOTE_CLIQUE, cfg, EUC)
        good += sol.value.value >= opt / (K.REMOTE_CLIQUE.alpha + 1.0)
    assert good >= 95
