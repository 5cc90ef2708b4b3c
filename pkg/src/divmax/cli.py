"""Command-line harness: generate datasets, run algorithms, compute baselines, measure throughput.

Results are CSV on standard output.  Ratios are ``baseline / value``, so a
perfect solution scores 1 and worse solutions score more.

Exit codes: 0 success, 1 input/output failure, 2 usage error or an
algorithm/objective combination that does not exist.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from dataclasses import dataclass, fields

from .diversity import DiversityKind
from .errors import ConfigurationError, OracleRefusal, ParseError, ShapeError
from .metric import MetricSpace, PointSet
from .oracle import GUARD, brute_force
from .pipeline import (PARTITIONINGS, RANDOM, PipelineConfig, mr_multi_round, mr_randomized,
                       mr_three_round_gen, mr_two_round)
from .seqsolve import GENERALIZED_KINDS, solve_sequential
from .streamcore import DELEGATES, PLAIN, StreamParams, run_stream, smm_ext_run, smm_gen_two_pass, smm_run
from . import data

ALGORITHMS = ("seq", "stream", "stream2pass", "mr2", "mr2rand", "mrmulti", "mr3gen", "oracle")
BASELINE_SEEDS = 10
BASELINE_MEMORY = 16384


class UsageError(Exception):
    pass


@dataclass
class ExperimentRecord:
    """One CSV row of ``run``."""

    algorithm: str
    kind: str
    n: int
    k: int
    kprime: int
    ell: int
    partitioning: str
    seed: int
    value: float
    baseline_value: float | None = None
    ratio: float | None = None
    millis: float | None = None
    throughput_pts_per_sec: float | None = None

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_row(self) -> list[str]:
        def fmt(v, spec=".17g"):
            return "" if v is None else format(v, spec)
        return [self.algorithm, self.kind, str(self.n), str(self.k), str(self.kprime), str(self.ell),
                self.partitioning, str(self.seed), fmt(self.value), fmt(self.baseline_value),
                fmt(self.ratio), fmt(self.millis, ".3f"), fmt(self.throughput_pts_per_sec, ".1f")]

    @classmethod
    def from_row(cls, row: list[str]) -> "ExperimentRecord":
        def opt(s):
            return None if s == "" else float(s)
        return cls(row[0], row[1], int(row[2]), int(row[3]), int(row[4]), int(row[5]), row[6],
                   int(row[7]), float(row[8]), opt(row[9]), opt(row[10]), opt(row[11]), opt(row[12]))


def ratio(baseline: float | None, value: float) -> float | None:
    if baseline is None:
        return None
    if value == 0:
        return 1.0 if baseline == 0 else math.inf
    return baseline / value


def read_records(text: str) -> list[ExperimentRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ExperimentRecord.header():
        raise ValueError("missing or unexpected header")
    return [ExperimentRecord.from_row(r) for r in rows[1:]]


# -- running algorithms -------------------------------------------------------

def _dimension(S: PointSet, args) -> float:
    return args.D if args.D is not None else float(max(S.dim, 1))


def check_compatible(alg: str, kind: DiversityKind) -> None:
    if alg in ("stream2pass", "mr3gen") and kind not in GENERALIZED_KINDS:
        raise UsageError(f"{alg} is only defined for remote-clique, -star, -bipartition and -tree")
    if alg == "mr2rand" and not kind.needs_delegates:
        raise UsageError("mr2rand is only defined for remote-clique, -star, -bipartition and -tree")


def run_once(alg: str, S: PointSet, kind: DiversityKind, args, seed: int, metric: MetricSpace):
    """Returns ``(value, kprime, ell, partitioning, trace)``."""
    D = _dimension(S, args)
    ell, scheme, trace = 1, "none", None
    if alg == "seq":
        sol = solve_sequential(kind, S, args.k, metric)
        kprime = len(S)
    elif alg == "oracle":
        res = brute_force(kind, S, args.k, metric)
        return res.value, len(S), 1, "none", None
    elif alg in ("stream", "stream2pass"):
        params = StreamParams(args.k, args.kprime, args.epsilon, D, args.strict)
        if alg == "stream2pass":
            sol = smm_gen_two_pass(S, S, kind, params, metric)
            kprime = sol.meta["kprime"]
        else:
            construction = "smm_ext" if kind.needs_delegates else "smm"
            kprime = params.resolve(construction, len(S))
            core = (smm_ext_run if kind.needs_delegates else smm_run)(S, params, metric)
            sol = solve_sequential(kind, core, args.k, metric)
    else:
        scheme = RANDOM if alg == "mr2rand" else args.partitioning
        cfg = PipelineConfig(args.k, args.ell, args.kprime, scheme, seed, args.epsilon, D,
                             args.gamma, args.strict, args.threads, args.delegate_constant,
                             args.memory)
        fn = {"mr2": mr_two_round, "mr2rand": mr_randomized, "mrmulti": mr_multi_round,
              "mr3gen": mr_three_round_gen}[alg]
        sol, trace = fn(S, kind, cfg, metric)
        kprime, ell = sol.meta["kprime"], args.ell
    return sol.value.value, kprime, ell, scheme, trace


def _load(args) -> PointSet:
    return data.load(args.dataset, sparse=args.sparse, min_entries=args.min_entries)


def _baseline_value(spec: str | None, S: PointSet, kind: DiversityKind, k: int,
                    metric: MetricSpace) -> float | None:
    if spec is None:
        return None
    if spec == "oracle":
        try:
            return brute_force(kind, S, k, metric).value
        except OracleRefusal as exc:
            raise UsageError(f"oracle baseline unavailable: {exc}") from None
    try:
        return float(spec)
    except ValueError:
        pass
    with open(spec, encoding="ascii") as fh:
        return float(fh.read().split()[0])


def cmd_run(args, out) -> int:
    kind = DiversityKind.parse(args.kind)
    check_compatible(args.alg, kind)
    S = _load(args)
    metric = MetricSpace(args.metric)
    baseline = _baseline_value(args.baseline, S, kind, args.k, metric)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ExperimentRecord.header())
    traces = []
    for r in range(args.repeat):
        seed = args.seed + r
        start = time.perf_counter()
        value, kprime, ell, scheme, trace = run_once(args.alg, S, kind, args, seed, metric)
        millis = (time.perf_counter() - start) * 1e3
        rec = ExperimentRecord(args.alg, kind.label, len(S), args.k, kprime, ell, scheme, seed, value,
                               baseline, ratio(baseline, value))
        if not args.no_timings:
            rec.millis = millis
            rec.throughput_pts_per_sec = len(S) / max(millis / 1e3, 1e-12)
        writer.writerow(rec.to_row())
        if trace is not None:
            traces.append(trace)
    if args.trace and traces:
        with open(args.trace, "w", encoding="ascii") as fh:
            for t in traces:
                fh.write(t.to_csv())
    return 0


def compute_baseline(S: PointSet, kind: DiversityKind, k: int, metric: MetricSpace, ell: int,
                     memory: int = BASELINE_MEMORY, seed: int = 0, seeds: int = BASELINE_SEEDS,
                     threads: int = 1) -> float:
    """Best value over ``seeds`` randomly partitioned 2-round runs with the largest kernel the memory allows.

    When the instance is small enough for the exhaustive search, its value is
    included, so the baseline then equals the optimum.
    """
    ell = max(1, min(ell, len(S) // k))
    per_part = len(S) // ell
    weight = k if kind.needs_delegates else 1
    kprime = max(k, min(per_part, memory // (ell * weight)))
    best = -math.inf
    for s in range(seed, seed + seeds):
        cfg = PipelineConfig(k, ell, min(kprime, per_part), RANDOM, s, threads=threads)
        sol, _ = mr_two_round(S, kind, cfg, metric)
        best = max(best, sol.value.value)
    if kind.exact_at(k) and math.comb(len(S), k) <= GUARD:
        best = max(best, brute_force(kind, S, k, metric).value)
    return best


def cmd_baseline(args, out) -> int:
    kind = DiversityKind.parse(args.kind)
    S = _load(args)
    value = compute_baseline(S, kind, args.k, MetricSpace(args.metric), args.ell, args.memory,
                             args.seed, args.seeds, args.threads)
    text = f"{value:.17g}\n"
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
    out.write(text)
    return 0


def measure_throughput(S: PointSet, k: int, kprime: int, metric: MetricSpace, mode: str,
                       runs: int = 2) -> float:
    """Best points-per-second over ``runs`` passes of the streaming kernel on in-memory data."""
    best = 0.0
    kprime = max(1, min(kprime, max(len(S), 1)))
    for _ in range(runs):
        start = time.perf_counter()
        run_stream(S, k, kprime, metric, mode)
        elapsed = time.perf_counter() - start
        best = max(best, len(S) / max(elapsed, 1e-9))
    return best


def _grid(text: str) -> list[tuple[int, int]]:
    pairs = []
    for tok in text.split(","):
        a, sep, b = tok.partition(":")
        if not sep:
            raise UsageError(f"grid entries look like k:kprime, got {tok!r}")
        pairs.append((int(a), int(b)))
    return pairs


def cmd_throughput(args, out) -> int:
    grid = _grid(args.grid)
    S = _load(args)
    metric = MetricSpace(args.metric)
    mode = DELEGATES if args.mode == "smm_ext" else PLAIN
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["mode", "k", "kprime", "n", "throughput_pts_per_sec"])
    results = []
    for k, kprime in grid:
        rate = measure_throughput(S, k, kprime, metric, mode, args.runs)
        results.append((k * kprime, rate))
        writer.writerow([args.mode, k, kprime, len(S), f"{rate:.1f}"])
    ordered = sorted(results)
    inversions = sum(1 for a, b in zip(ordered, ordered[1:]) if b[0] > a[0] and b[1] > a[1])
    print(f"# throughput inversions along increasing k*kprime: {inversions}", file=sys.stderr)
    return 0


def cmd_generate(args, out) -> int:
    spec = data.DatasetSpec(args.n, args.k_planted, args.dim, args.seed, args.inner_radius)
    data.save_dense(data.gen_sphere(spec), args.out)
    return 0


# -- argument parsing -----------------------------------------------------------

def _dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("dataset", help="dense or sparse vector file (.gz allowed)")
    p.add_argument("--sparse", action="store_true", help="read index:count tokens")
    p.add_argument("--min-entries", type=int, default=data.SPARSE_MIN_ENTRIES)
    p.add_argument("--metric", choices=("euclidean", "cosine"), default="euclidean")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divmax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a planted-sphere dataset")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k-planted", type=int, required=True)
    g.add_argument("--dim", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--inner-radius", type=float, default=0.8)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run an algorithm and print CSV records")
    _dataset_args(r)
    r.add_argument("--alg", choices=ALGORITHMS, required=True)
    r.add_argument("--kind", required=True, help="e.g. remote-edge, remote-clique")
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--kprime", type=int)
    r.add_argument("--ell", type=int, default=1)
    r.add_argument("--partitioning", choices=PARTITIONINGS, default="contiguous")
    r.add_argument("--epsilon", type=float, default=1.0)
    r.add_argument("--D", type=float, help="doubling dimension for --strict (default: data dimension)")
    r.add_argument("--gamma", type=float, default=1.0 / 3.0)
    r.add_argument("--memory", type=int, help="reducer budget for mrmulti")
    r.add_argument("--delegate-constant", type=float, default=4.0)
    r.add_argument("--strict", action="store_true", help="kernel sizes from the worst-case bounds")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--repeat", type=int, default=1)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--baseline", help="'oracle', a number, or a file written by 'baseline'")
    r.add_argument("--trace", help="write per-round CSV traces of MapReduce runs here")
    r.add_argument("--no-timings", action="store_true", help="leave timing columns empty")

    b = sub.add_parser("baseline", help="best value over many randomized 2-round runs")
    _dataset_args(b)
    b.add_argument("--kind", required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--ell", type=int, default=8)
    b.add_argument("--memory", type=int, default=BASELINE_MEMORY)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--seeds", type=int, default=BASELINE_SEEDS)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--out")

    t = sub.add_parser("throughput", help="points per second of the streaming kernel")
    _dataset_args(t)
    t.add_argument("--grid", required=True, help="comma-separated k:kprime pairs")
    t.add_argument("--mode", choices=("smm", "smm_ext"), default="smm")
    t.add_argument("--runs", type=int, default=2)
    return parser


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "baseline": cmd_baseline,
            "throughput": cmd_throughput}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "repeat", 1) < 1:
            raise UsageError("--repeat must be positive")
        return COMMANDS[args.command](args, out)
    except (UsageError, ConfigurationError, OracleRefusal) as exc:
        print(f"divmax: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        if isinstance(exc, (ParseError, ShapeError)):
            print(f"divmax: {args.dataset}: {exc}", file=sys.stderr)
            return 1
        print(f"divmax: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"divmax: {exc}", file=sys.stderr)
        return 1
