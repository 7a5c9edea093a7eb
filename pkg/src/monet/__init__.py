"""Multi-task optimisation over a k-nearest-neighbour graph of tasks."""

__version__ = "0.1.0"

from .analysis import auc, coupon_collector, holm_bonferroni, mann_whitney_u
from .archive import Archive
from .benchmarks import BENCHMARKS, Benchmark, get_benchmark
from .graph import NeighborhoodKind, SelectionStrategy, TaskGraph, build_graph, select_neighbor
from .operators import OperatorParams, gaussian_mutate, iso_line_dd, sbx_crossover
from .optimizers import RunConfig, RunTrace, individual_learning, run_monet, run_mtme, social_learning
from .spaces import BoundedSpace, TaskSet, sample_cvt_tasks, sample_uniform_tasks

__all__ = [
    "Archive",
    "BENCHMARKS",
    "Benchmark",
    "BoundedSpace",
    "NeighborhoodKind",
    "OperatorParams",
    "RunConfig",
    "RunTrace",
    "SelectionStrategy",
    "TaskGraph",
    "TaskSet",
    "auc",
    "build_graph",
    "coupon_collector",
    "gaussian_mutate",
    "get_benchmark",
    "holm_bonferroni",
    "individual_learning",
    "iso_line_dd",
    "mann_whitney_u",
    "run_monet",
    "run_mtme",
    "sample_cvt_tasks",
    "sample_uniform_tasks",
    "sbx_crossover",
    "select_neighbor",
    "social_learning",
]
