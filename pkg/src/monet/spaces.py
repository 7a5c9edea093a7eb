"""Bounded parameter spaces and fixed task sets.

Task sets are generated once per experiment and shared by every algorithm
and seed, so everything here is a pure function of its arguments and seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree


@dataclass(frozen=True, eq=False)
class BoundedSpace:
    """Axis-aligned box ``lower <= x <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-D vectors of equal length")
        if lower.size < 1:
            raise ValueError("a space needs at least one dimension")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise ValueError("bounds must be finite")
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def box(cls, low: float, high: float, dim: int) -> "BoundedSpace":
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def clip(self, x):
        return np.clip(x, self.lower, self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.uniform(self.lower, self.upper, size=shape)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __eq__(self, other):
        if not isinstance(other, BoundedSpace):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __repr__(self):
        return f"BoundedSpace(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


@dataclass(eq=False)
class TaskSet:
    """A fixed matrix of task parameter vectors, one row per task."""

    space: BoundedSpace
    tasks: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        tasks = np.asarray(self.tasks, dtype=float)
        if tasks.ndim == 1:
            tasks = tasks.reshape(-1, 1) if self.space.dim == 1 else tasks.reshape(1, -1)
        if tasks.ndim != 2 or tasks.shape[1] != self.space.dim:
            raise ValueError(f"tasks must have shape (n, {self.space.dim}), got {tasks.shape}")
        if tasks.shape[0] < 1:
            raise ValueError("a task set needs at least one task")
        if not (np.all(tasks >= self.space.lower) and np.all(tasks <= self.space.upper)):
            raise ValueError("task vectors must lie inside the space bounds")
        if np.unique(tasks, axis=0).shape[0] != tasks.shape[0]:
            raise ValueError("task vectors must be distinct")
        tasks = np.ascontiguousarray(tasks)
        tasks.setflags(write=False)
        self.tasks = tasks

    @property
    def n(self) -> int:
        return int(self.tasks.shape[0])

    @property
    def dim(self) -> int:
        return self.space.dim

    def __len__(self):
        return self.n


def _check_count(n: int, what: str = "n") -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"{what} must be a positive integer, got {n!r}")
    return int(n)


def sample_uniform_tasks(space: BoundedSpace, n: int, seed: int = 0) -> TaskSet:
    """Draw ``n`` i.i.d. uniform task vectors inside ``space``."""
    n = _check_count(n)
    rng = np.random.default_rng(seed)
    tasks = space.sample(rng, n)
    return TaskSet(space, tasks, {"method": "uniform", "seed": seed, "n": n})


def lloyd_kmeans(samples: np.ndarray, centroids: np.ndarray, iters: int):
    """Run ``iters`` Lloyd iterations starting from ``centroids``.

    Returns the final centroids and the total squared quantization error
    measured at the start of every iteration plus once after the last update
    (``iters + 1`` values, non-increasing).

    An empty cluster is moved onto the sample farthest from its nearest
    centroid; several empty clusters take successive farthest samples.
    """
    samples = np.asarray(samples, dtype=float)
    centroids = np.array(centroids, dtype=float, copy=True)
    k, dim = centroids.shape
    errors = []
    for _ in range(iters):
        dist, label = cKDTree(centroids).query(samples, workers=1)
        errors.append(float(np.dot(dist, dist)))
        counts = np.bincount(label, minlength=k)
        sums = np.zeros((k, dim))
        for j in range(dim):
            sums[:, j] = np.bincount(label, weights=samples[:, j], minlength=k)
        filled = counts > 0
        centroids[filled] = sums[filled] / counts[filled, None]
        empty = np.flatnonzero(~filled)
        if empty.size:
            # stable sort keeps the choice deterministic under distance ties
            farthest = np.argsort(-dist, kind="stable")[: empty.size]
            centroids[empty] = samples[farthest]
    dist, _ = cKDTree(centroids).query(samples, workers=1)
    errors.append(float(np.dot(dist, dist)))
    return centroids, errors


def quantization_error(samples: np.ndarray, points: np.ndarray) -> float:
    """Total squared distance from each sample to its nearest point."""
    dist, _ = cKDTree(np.asarray(points, dtype=float)).query(samples, workers=1)
    return float(np.dot(dist, dist))


def sample_cvt_tasks(
    space: BoundedSpace,
    n: int,
    oversample: int = 100_000,
    lloyd_iters: int = 50,
    seed: int = 0,
) -> TaskSet:
    """Evenly spread task set: centroids of Lloyd's k-means on a uniform cloud.

    The cloud holds ``oversample`` uniform points and k-means starts from its
    first ``n`` points.
    """
    n = _check_count(n)
    oversample = _check_count(oversample, "oversample")
    lloyd_iters = _check_count(lloyd_iters, "lloyd_iters")
    if oversample < n:
        raise ValueError("oversample must be at least n")
    rng = np.random.default_rng(seed)
    samples = space.sample(rng, oversample)
    centroids, _ = lloyd_kmeans(samples, samples[:n], lloyd_iters)
    # centroids are convex combinations of in-bounds samples; clip rounding only
    centroids = space.clip(centroids)
    meta = {
        "method": "cvt",
        "seed": seed,
        "n": n,
        "oversample": oversample,
        "lloyd_iters": lloyd_iters,
    }
    return TaskSet(space, centroids, meta)


def save_task_set(task_set: TaskSet, path) -> Path:
    """Write ``path`` (CSV, 17 significant digits) and a ``.json`` sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ",".join(f"tau_{j}" for j in range(task_set.dim))
    np.savetxt(path, task_set.tasks, fmt="%.17g", delimiter=",", header=header, comments="")
    sidecar = {**task_set.space.to_dict(), **task_set.meta, "n": task_set.n, "dim": task_set.dim}
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def load_task_set(path) -> TaskSet:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    space = BoundedSpace(meta.pop("lower"), meta.pop("upper"))
    tasks = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    meta.pop("dim", None)
    return TaskSet(space, tasks, meta)
