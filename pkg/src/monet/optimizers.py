"""MONET main loop, its two learning subroutines, and the MT-ME baseline.

Randomness
----------
A run seed spawns four independent PCG64 streams through
``numpy.random.SeedSequence``:

0. ``tasks``: the task drawn at every initialisation and main-loop step,
1. ``branch``: the uniform compared against ``p_ind`` at every MONET step,
2. ``variation``: random solutions, neighbour draws, parent draws and all
   operator noise, consumed in program order,
3. ``graph``: neighbourhood construction for the random and
   distance-proportional kinds.

The first two are drawn in blocks, which does not change the sequence of
values consumed.
"""
from __future__ import annotations

import dataclasses
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .archive import Archive
from .graph import NeighborhoodKind, SelectionStrategy, TaskGraph, build_graph, select_neighbor
from .operators import OperatorParams, gaussian_mutate, iso_line_dd, sbx_crossover
from .spaces import BoundedSpace, TaskSet

_BLOCK = 4096


class FitnessEvaluationError(RuntimeError):
    """A fitness call raised or returned a non-finite value; the run is aborted."""


@dataclass(frozen=True)
class RunConfig:
    budget: int = 1_000_000
    k_init: int | None = None  # None: one random evaluation per task on average
    p_ind: float = 0.3
    neighborhood: NeighborhoodKind = NeighborhoodKind.CLOSEST
    neighbor_percentage: float = 0.05
    strategy: SelectionStrategy = SelectionStrategy.BEST_FITNESS
    operators: OperatorParams = field(default_factory=OperatorParams)
    seed: int = 0
    checkpoint_every: int | None = None  # None: budget // 1000
    empty_value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "neighborhood", NeighborhoodKind(self.neighborhood))
        object.__setattr__(self, "strategy", SelectionStrategy(self.strategy))
        if isinstance(self.operators, dict):
            object.__setattr__(self, "operators", OperatorParams(**self.operators))
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if self.k_init is not None and not 0 <= self.k_init <= self.budget:
            raise ValueError("k_init must lie in [0, budget]")
        if not 0.0 <= self.p_ind <= 1.0:
            raise ValueError("p_ind must lie in [0, 1]")
        if not 0.0 < self.neighbor_percentage <= 1.0:
            raise ValueError("neighbor_percentage must lie in (0, 1]")
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be positive")

    def resolved_k_init(self, n_tasks: int) -> int:
        return min(self.budget, n_tasks if self.k_init is None else self.k_init)

    def resolved_checkpoint_every(self) -> int:
        if self.checkpoint_every is not None:
            return self.checkpoint_every
        return max(1, self.budget // 1000)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["neighborhood"] = self.neighborhood.value
        out["strategy"] = self.strategy.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class RunTrace:
    """Learning curve and end state of one run."""

    checkpoints: np.ndarray  # (k, 2): eval_count, mean_fitness
    final_archive: Archive
    config: RunConfig
    algorithm: str
    draw_counts: np.ndarray  # per task: times drawn as focal/target task
    eval_counts: np.ndarray  # per task: fitness evaluations attributed to it
    stats: dict
    wall_time: float = 0.0

    @property
    def evals(self) -> np.ndarray:
        return self.checkpoints[:, 0].astype(np.int64)

    @property
    def curve(self) -> np.ndarray:
        return self.checkpoints[:, 1]

    @property
    def final_mean_fitness(self) -> float:
        return self.final_archive.mean_fitness(self.config.empty_value)

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["eval_count,mean_fitness"]
        lines += [f"{int(e)},{m:.17g}" for e, m in self.checkpoints]
        path.write_text("\n".join(lines) + "\n")
        return path


def read_trace_csv(path) -> np.ndarray:
    """Load a ``(k, 2)`` checkpoint array written by :meth:`RunTrace.to_csv`."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


class Evaluator:
    """Counts every fitness call and records checkpoints.

    Each call increments ``archive.eval_count`` by exactly one. Stochastic
    benchmarks receive the key ``(seed, eval_count)`` so their internal
    randomness is reproducible per evaluation.
    """

    def __init__(self, fitness, tasks: np.ndarray, archive: Archive, seed: int,
                 checkpoint_every: int, empty_value: float = 0.0):
        self.fitness = fitness
        self.stochastic = bool(getattr(fitness, "stochastic", False))
        self.tasks = tasks
        self.archive = archive
        self.seed = seed
        self.every = checkpoint_every
        self.empty_value = empty_value
        self.per_task = np.zeros(len(tasks), dtype=np.int64)
        self.checkpoints: list[tuple[int, float]] = []

    def __call__(self, solution: np.ndarray, task: int) -> float:
        count = self.archive.eval_count
        try:
            if self.stochastic:
                value = self.fitness(solution, self.tasks[task], (self.seed, count))
            else:
                value = self.fitness(solution, self.tasks[task])
            value = float(value)
        except Exception as exc:
            raise FitnessEvaluationError(
                f"fitness failed at evaluation {count} on task {task} for solution {np.asarray(solution).tolist()}"
            ) from exc
        if not math.isfinite(value):
            raise FitnessEvaluationError(
                f"non-finite fitness {value} at evaluation {count} on task {task}"
            )
        self.archive.eval_count = count + 1
        self.per_task[task] += 1
        return value

    def checkpoint(self):
        """Record the mean fitness if the current count lies on the grid."""
        count = self.archive.eval_count
        if count % self.every == 0 and (not self.checkpoints or self.checkpoints[-1][0] != count):
            self.checkpoints.append((count, self.archive.mean_fitness(self.empty_value)))

    def finish(self):
        count = self.archive.eval_count
        if not self.checkpoints or self.checkpoints[-1][0] != count:
            self.checkpoints.append((count, self.archive.mean_fitness(self.empty_value)))


def individual_learning(task: int, archive: Archive, evaluate, space: BoundedSpace, sigma_m: float,
                        rng: np.random.Generator, stats: Counter | None = None) -> bool:
    """Mutate the task's own elite, or seed an empty node with a random solution.

    Always performs exactly one evaluation and returns ``True``.
    """
    if not archive.filled[task]:
        theta = space.sample(rng)
        archive.try_insert(task, theta, evaluate(theta, task))
        if stats is not None:
            stats["random_init"] += 1
        return True
    child = gaussian_mutate(archive.solutions[task], space, sigma_m, rng)
    archive.try_insert(task, child, evaluate(child, task))
    if stats is not None:
        stats["mutation"] += 1
    return True


def social_learning(task: int, neighbor: int, archive: Archive, evaluate, space: BoundedSpace, eta_c: float,
                    rng: np.random.Generator, stats: Counter | None = None) -> bool:
    """Recombine the focal elite with a neighbour's elite.

    An empty focal node is seeded with a copy of the neighbour's solution
    (re-evaluated on the focal task) or, if the neighbour is empty too, a
    random solution. A filled focal node with an empty neighbour is left
    alone and nothing is evaluated; only then is ``False`` returned.
    """
    filled = archive.filled
    if not filled[task]:
        if filled[neighbor]:
            theta = archive.solutions[neighbor].copy()
            kind = "copy"
        else:
            theta = space.sample(rng)
            kind = "random_fallback"
        archive.try_insert(task, theta, evaluate(theta, task))
        if stats is not None:
            stats[kind] += 1
        return True
    if not filled[neighbor]:
        if stats is not None:
            stats["skipped"] += 1
        return False
    child = sbx_crossover(archive.solutions[task], archive.solutions[neighbor], space, eta_c, rng)
    archive.try_insert(task, child, evaluate(child, task))
    if stats is not None:
        stats["sbx"] += 1
    return True


def _streams(seed: int):
    children = np.random.SeedSequence(seed).spawn(4)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _blocks(rng: np.random.Generator, draw):
    while True:
        yield from draw(rng, _BLOCK).tolist()


def _task_set_arrays(tasks):
    if isinstance(tasks, TaskSet):
        return tasks.tasks
    arr = np.asarray(tasks, dtype=float)
    return arr.reshape(len(arr), -1)


def _solution_space(fitness, space: BoundedSpace | None) -> BoundedSpace:
    space = space if space is not None else getattr(fitness, "solution_space", None)
    if space is None:
        raise ValueError("a solution space is required when fitness is a bare callable")
    return space


def _initialise(k_init, task_draws, evaluate, archive, space, rng, draw_counts):
    for _ in range(k_init):
        i = next(task_draws)
        draw_counts[i] += 1
        theta = space.sample(rng)
        archive.try_insert(i, theta, evaluate(theta, i))
        evaluate.checkpoint()


def run_monet(tasks, fitness, config: RunConfig = RunConfig(), *, solution_space: BoundedSpace | None = None,
              graph: TaskGraph | None = None, archive: Archive | None = None) -> RunTrace:
    """Run MONET until exactly ``config.budget`` fitness evaluations have been spent.

    ``fitness`` is a :class:`~monet.benchmarks.Benchmark` or any callable
    ``f(solution, task_vector)``; a bare callable needs ``solution_space``.
    A prebuilt ``graph`` may be passed to share it across seeds, and a
    pre-filled ``archive`` to warm-start the loop.
    """
    started = time.perf_counter()
    tau = _task_set_arrays(tasks)
    n = tau.shape[0]
    space = _solution_space(fitness, solution_space)
    task_rng, branch_rng, rng, graph_rng = _streams(config.seed)
    if graph is None:
        graph_seed = int(graph_rng.integers(2**63))
        graph = build_graph(tau, config.neighbor_percentage, config.neighborhood, graph_seed)
    if graph.n != n:
        raise ValueError("graph and task set sizes differ")
    if archive is None:
        archive = Archive(n, space.dim)

    evaluate = Evaluator(fitness, tau, archive, config.seed, config.resolved_checkpoint_every(), config.empty_value)
    draw_counts = np.zeros(n, dtype=np.int64)
    stats = Counter()
    budget = config.budget
    task_draws = _blocks(task_rng, lambda r, k: r.integers(n, size=k))
    coins = _blocks(branch_rng, lambda r, k: r.random(k))

    _initialise(config.resolved_k_init(n), task_draws, evaluate, archive, space, rng, draw_counts)

    p_ind = config.p_ind
    sigma_m = config.operators.sigma_m
    eta_c = config.operators.eta_c
    strategy = config.strategy
    while archive.eval_count < budget:
        i = next(task_draws)
        draw_counts[i] += 1
        if next(coins) < p_ind:
            individual_learning(i, archive, evaluate, space, sigma_m, rng, stats)
        else:
            j = select_neighbor(graph, i, archive, strategy, rng)
            if j is None:
                stats["no_neighbor"] += 1
                continue
            if not social_learning(i, j, archive, evaluate, space, eta_c, rng, stats):
                continue
        evaluate.checkpoint()
    evaluate.finish()

    stats["init"] = config.resolved_k_init(n)
    return RunTrace(
        checkpoints=np.array(evaluate.checkpoints, dtype=float).reshape(-1, 2),
        final_archive=archive,
        config=config,
        algorithm="monet",
        draw_counts=draw_counts,
        eval_counts=evaluate.per_task,
        stats=dict(stats),
        wall_time=time.perf_counter() - started,
    )


def run_mtme(tasks, fitness, config: RunConfig = RunConfig(), *, solution_space: BoundedSpace | None = None,
             archive: Archive | None = None) -> RunTrace:
    """Multi-task MAP-Elites baseline with global parent selection.

    After the shared random initialisation, each step draws a uniform target
    task and two parents uniformly (with replacement) from all filled
    entries, creates an iso-line-dd child, and evaluates it on the target.
    A random solution is used while the archive is still empty.
    """
    started = time.perf_counter()
    tau = _task_set_arrays(tasks)
    n = tau.shape[0]
    space = _solution_space(fitness, solution_space)
    task_rng, _, rng, _ = _streams(config.seed)
    if archive is None:
        archive = Archive(n, space.dim)

    evaluate = Evaluator(fitness, tau, archive, config.seed, config.resolved_checkpoint_every(), config.empty_value)
    draw_counts = np.zeros(n, dtype=np.int64)
    stats = Counter()
    budget = config.budget
    task_draws = _blocks(task_rng, lambda r, k: r.integers(n, size=k))

    _initialise(config.resolved_k_init(n), task_draws, evaluate, archive, space, rng, draw_counts)

    sigma1 = config.operators.iso_sigma1
    sigma2 = config.operators.iso_sigma2
    solutions = archive.solutions
    order = archive.fill_order
    while archive.eval_count < budget:
        target = next(task_draws)
        draw_counts[target] += 1
        filled = archive.n_filled
        if filled == 0:
            child = space.sample(rng)
            stats["random_fallback"] += 1
        else:
            a = order[rng.integers(filled)]
            b = order[rng.integers(filled)]
            child = iso_line_dd(solutions[a], solutions[b], space, sigma1, sigma2, rng)
            stats["iso_line_dd"] += 1
        archive.try_insert(target, child, evaluate(child, target))
        evaluate.checkpoint()
    evaluate.finish()

    stats["init"] = config.resolved_k_init(n)
    return RunTrace(
        checkpoints=np.array(evaluate.checkpoints, dtype=float).reshape(-1, 2),
        final_archive=archive,
        config=config,
        algorithm="mtme",
        draw_counts=draw_counts,
        eval_counts=evaluate.per_task,
        stats=dict(stats),
        wall_time=time.perf_counter() - started,
    )


ALGORITHMS = {"monet": run_monet, "mtme": run_mtme}
