"""Experiment orchestration: one task set, many seeds, CSV traces and JSON manifests.

Layout under ``output_dir``::

    tasks/<benchmark>_<source>_n<n>_s<task_seed>.csv   (+ .json sidecar)
    <label>/<benchmark>/seed_<seed>.csv                 learning curve
    <label>/<benchmark>/seed_<seed>.json                run manifest
    <label>/<benchmark>/archive_seed_<seed>.csv         final archive
    <label>/<benchmark>/experiment.json                 experiment manifest

``label`` is the algorithm name, or ``<algorithm>-<preset>`` for presets.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import platform
import tempfile
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import auc
from .benchmarks import BENCHMARKS, get_benchmark
from .graph import NeighborhoodKind, SelectionStrategy, build_graph
from .optimizers import ALGORITHMS, RunConfig
from .spaces import TaskSet, sample_cvt_tasks, sample_uniform_tasks, save_task_set

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "MONET_OUTPUT_ROOT"
TASK_SOURCES = ("cvt", "uniform")


def default_config() -> RunConfig:
    """Shared default: best-fitness neighbour, closest neighbourhood, p_ind 0.3, 5 %."""
    return RunConfig(
        budget=1_000_000,
        k_init=None,
        p_ind=0.3,
        neighborhood=NeighborhoodKind.CLOSEST,
        neighbor_percentage=0.05,
        strategy=SelectionStrategy.BEST_FITNESS,
    )


PRESETS = {
    "default": default_config(),
    "archery-tuned": default_config().replace(strategy="best_fitness", neighborhood="closest",
                                              p_ind=0.0, neighbor_percentage=0.02),
    "arm-tuned": default_config().replace(strategy="random", neighborhood="closest",
                                          p_ind=0.3, neighbor_percentage=0.01),
    "cartpole-tuned": default_config().replace(strategy="best_fitness", neighborhood="random",
                                               p_ind=0.5, neighbor_percentage=0.01),
    "hexapod-tuned": default_config().replace(strategy="best_fitness", neighborhood="random",
                                              p_ind=0.0, neighbor_percentage=0.01),
}


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "results"))


@dataclass
class ExperimentSpec:
    benchmark: str
    algorithm: str = "monet"
    task_source: str = "cvt"
    n_tasks: int = 5000
    task_seed: int = 0
    run_config: RunConfig = field(default_factory=default_config)
    seeds: list = field(default_factory=lambda: [0])
    output_dir: Path = field(default_factory=default_output_root)
    preset: str | None = None
    cvt_oversample: int = 100_000
    cvt_iters: int = 50
    save_archive: bool = True

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        self.seeds = [int(s) for s in self.seeds]
        if isinstance(self.run_config, dict):
            self.run_config = RunConfig.from_dict(self.run_config)
        self.validate()

    def validate(self):
        if self.benchmark not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}; choose from {sorted(BENCHMARKS)}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if self.task_source not in TASK_SOURCES:
            raise ValueError(f"task_source must be one of {TASK_SOURCES}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if self.n_tasks < 1:
            raise ValueError("n_tasks must be positive")

    @property
    def label(self) -> str:
        if self.preset and self.preset != "default":
            return f"{self.algorithm}-{self.preset}"
        return self.algorithm

    @property
    def run_dir(self) -> Path:
        return self.output_dir / self.label / self.benchmark

    @property
    def task_file(self) -> Path:
        return self.output_dir / "tasks" / f"{self.benchmark}_{self.task_source}_n{self.n_tasks}_s{self.task_seed}.csv"

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        out["run_config"] = self.run_config.to_dict()
        out["output_dir"] = str(self.output_dir)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        preset = data.get("preset")
        base = PRESETS[preset] if preset else default_config()
        overrides = data.get("run_config") or {}
        if isinstance(overrides, RunConfig):
            overrides = overrides.to_dict()
        data["run_config"] = RunConfig.from_dict({**base.to_dict(), **overrides})
        return cls(**data)


def make_task_set(spec: ExperimentSpec) -> TaskSet:
    space = get_benchmark(spec.benchmark).task_space
    if spec.task_source == "cvt":
        return sample_cvt_tasks(space, spec.n_tasks, spec.cvt_oversample, spec.cvt_iters, spec.task_seed)
    return sample_uniform_tasks(space, spec.n_tasks, spec.task_seed)


def _check_writable(directory: Path):
    directory.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(dir=directory, prefix=".probe-"):
        pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict:
    import scipy

    return {"monet": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _run_seed(spec: ExperimentSpec, task_set: TaskSet, seed: int, graph) -> dict:
    bench = get_benchmark(spec.benchmark)
    config = spec.run_config.replace(seed=seed)
    runner = ALGORITHMS[spec.algorithm]
    kwargs = {"graph": graph} if spec.algorithm == "monet" and graph is not None else {}
    record = {"kind": "run", "seed": seed, "label": spec.label, "algorithm": spec.algorithm,
              "benchmark": spec.benchmark, "preset": spec.preset, "config": config.to_dict(),
              "checkpoint_every": config.resolved_checkpoint_every(),
              "task_file": str(spec.task_file.name)}
    trace_path = spec.run_dir / f"seed_{seed}.csv"
    try:
        trace = runner(task_set, bench, config, **kwargs)
        trace.to_csv(trace_path)
        if spec.save_archive:
            trace.final_archive.to_csv(spec.run_dir / f"archive_seed_{seed}.csv", task_set.tasks)
        record.update(
            status="ok",
            trace_file=trace_path.name,
            final_mean_fitness=trace.final_mean_fitness,
            auc=auc(trace, bench.normalizer),
            evaluations=int(trace.final_archive.eval_count),
            wall_time=trace.wall_time,
            stats=trace.stats,
        )
    except Exception as exc:  # recorded per seed; siblings keep running
        log.error("seed %s failed: %s", seed, exc)
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                      traceback=traceback.format_exc())
    (spec.run_dir / f"seed_{seed}.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return record


def _worker(payload):
    spec_dict, seed = payload
    spec = ExperimentSpec.from_dict(spec_dict)
    task_set = make_task_set(spec)
    graph = _shared_graph(spec, task_set)
    return _run_seed(spec, task_set, seed, graph)


def _shared_graph(spec: ExperimentSpec, task_set: TaskSet):
    # the closest graph does not depend on the seed, so one build serves all runs
    cfg = spec.run_config
    if spec.algorithm == "monet" and cfg.neighborhood is NeighborhoodKind.CLOSEST and task_set.n >= 2:
        return build_graph(task_set, cfg.neighbor_percentage, cfg.neighborhood)
    return None


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> dict:
    """Run every seed of ``spec`` and write traces plus manifests.

    Returns the experiment manifest. Failing seeds are recorded with
    ``status = "failed"`` without stopping the others.
    """
    spec.validate()
    _check_writable(spec.output_dir)
    _check_writable(spec.run_dir)
    task_set = make_task_set(spec)
    save_task_set(task_set, spec.task_file)

    workers = workers or os.cpu_count() or 1
    workers = min(workers, len(spec.seeds))
    if workers > 1:
        payloads = [(spec.to_dict(), s) for s in spec.seeds]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_worker, payloads))
    else:
        graph = _shared_graph(spec, task_set)
        records = [_run_seed(spec, task_set, s, graph) for s in spec.seeds]

    manifest = {
        "kind": "experiment",
        "spec": spec.to_dict(),
        "benchmark": spec.benchmark,
        "algorithm": spec.algorithm,
        "label": spec.label,
        "task_file": str(spec.task_file),
        "task_file_sha256": _sha256(spec.task_file),
        "versions": _versions(),
        "runs": [{k: r.get(k) for k in ("seed", "status", "trace_file", "final_mean_fitness", "auc", "error")}
                 for r in records],
    }
    (spec.run_dir / "experiment.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
