"""Core-set based diversity maximization in streaming and MapReduce settings."""

from .diversity import DiversityKind, EvalReport, evaluate
from .kcenter import GeneralizedCoreset, gmm, gmm_ext, gmm_gen
from .metric import MetricSpace, Point, PointSet
from .oracle import OracleResult, brute_force
from .pipeline import (PipelineConfig, RoundTrace, mr_multi_round, mr_randomized,
                       mr_three_round_gen, mr_two_round)
from .seqsolve import Solution, gendiv, solve_generalized, solve_sequential
from .streamcore import StreamParams, smm_ext_run, smm_gen_two_pass, smm_run

__all__ = [
    "DiversityKind", "EvalReport", "evaluate", "GeneralizedCoreset", "gmm", "gmm_ext", "gmm_gen",
    "MetricSpace", "Point", "PointSet", "OracleResult", "brute_force", "PipelineConfig",
    "RoundTrace", "mr_multi_round", "mr_randomized", "mr_three_round_gen", "mr_two_round",
    "Solution", "gendiv", "solve_generalized", "solve_sequential", "StreamParams", "smm_ext_run",
    "smm_gen_two_pass", "smm_run",
]
