"""k-nearest-neighbour task graph and neighbour selection.

Each task keeps an ordered list of ``N`` neighbour indices, sorted by
ascending Euclidean distance (ties by index). Lists are per node, so the
neighbour relation is not symmetric in general.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spaces import TaskSet


class NeighborhoodKind(str, enum.Enum):
    CLOSEST = "closest"
    RANDOM = "random"
    DISTANCE_PROPORTIONAL = "distance_proportional"


class SelectionStrategy(str, enum.Enum):
    RANDOM = "random"
    BEST_FITNESS = "best_fitness"


@dataclass(frozen=True, eq=False)
class TaskGraph:
    neighbors: np.ndarray  # (n, N) int64, read-only
    kind: NeighborhoodKind

    @property
    def n(self) -> int:
        return int(self.neighbors.shape[0])

    @property
    def size(self) -> int:
        """Neighbourhood size N."""
        return int(self.neighbors.shape[1])

    def __getitem__(self, i: int) -> np.ndarray:
        return self.neighbors[i]

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "N": self.size, "neighbors": self.neighbors.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "TaskGraph":
        nb = np.asarray(data["neighbors"], dtype=np.int64).reshape(len(data["neighbors"]), data["N"])
        return _frozen(nb, NeighborhoodKind(data["kind"]))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict()) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "TaskGraph":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _frozen(neighbors: np.ndarray, kind: NeighborhoodKind) -> TaskGraph:
    neighbors = np.ascontiguousarray(neighbors, dtype=np.int64)
    neighbors.setflags(write=False)
    return TaskGraph(neighbors, kind)


def neighborhood_size(n: int, neighbor_percentage: float) -> int:
    """``ceil(neighbor_percentage * n)`` clamped to ``n - 1``."""
    if not 0.0 < neighbor_percentage <= 1.0:
        raise ValueError("neighbor_percentage must lie in (0, 1]")
    # guard against products like 0.07 * 100 = 7.000000000000001
    size = math.ceil(neighbor_percentage * n - 1e-9)
    return max(1, min(size, n - 1))


def _sq_dists(tasks: np.ndarray, rows: slice) -> np.ndarray:
    diff = tasks[rows, None, :] - tasks[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _row_chunks(n: int, dim: int):
    step = max(1, 2_000_000 // max(1, n * dim))
    for start in range(0, n, step):
        yield slice(start, min(n, start + step))


def _sort_by_distance(chosen: np.ndarray, d2_row: np.ndarray) -> np.ndarray:
    order = np.lexsort((chosen, d2_row[chosen]))
    return chosen[order]


def build_graph(
    tasks: TaskSet | np.ndarray,
    neighbor_percentage: float,
    kind: NeighborhoodKind | str = NeighborhoodKind.CLOSEST,
    seed: int = 0,
) -> TaskGraph:
    """Build the per-task neighbour lists.

    ``closest`` takes the exact N nearest tasks. ``random`` draws N tasks
    uniformly without replacement. ``distance_proportional`` draws N tasks
    without replacement with probability proportional to
    ``1 / (1 + ||tau_i - tau_j||)``. Every list is returned in ascending
    distance order, ties broken by task index.
    """
    tau = tasks.tasks if isinstance(tasks, TaskSet) else np.asarray(tasks, dtype=float)
    if tau.ndim == 1:
        tau = tau[:, None]
    n, dim = tau.shape
    if n < 2:
        raise ValueError("a task graph needs at least two tasks")
    kind = NeighborhoodKind(kind)
    size = neighborhood_size(n, neighbor_percentage)
    rng = np.random.default_rng(seed)
    out = np.empty((n, size), dtype=np.int64)

    for rows in _row_chunks(n, dim):
        d2 = _sq_dists(tau, rows)
        local = np.arange(rows.stop - rows.start)
        own = local + rows.start
        if kind is NeighborhoodKind.CLOSEST:
            d2[local, own] = np.inf
            # stable sort: equal distances keep ascending index order
            out[rows] = np.argsort(d2, axis=1, kind="stable")[:, :size]
        elif kind is NeighborhoodKind.RANDOM:
            for r, i in zip(local, own):
                pick = rng.choice(n - 1, size=size, replace=False)
                pick[pick >= i] += 1
                out[i] = _sort_by_distance(pick, d2[r])
        else:
            # Exponential-race keys: the N smallest E_j / w_j are distributed
            # exactly as N sequential weighted draws without replacement.
            weights = 1.0 / (1.0 + np.sqrt(d2))
            keys = rng.standard_exponential(d2.shape) / weights
            keys[local, own] = np.inf
            pick = np.argpartition(keys, size - 1, axis=1)[:, :size]
            for r, i in zip(local, own):
                out[i] = _sort_by_distance(pick[r], d2[r])
    return _frozen(out, kind)


def select_neighbor(
    graph: TaskGraph,
    focal: int,
    archive,
    strategy: SelectionStrategy | str,
    rng: np.random.Generator,
) -> int | None:
    """Pick the social-learning partner of ``focal``.

    ``random`` returns a uniform member of the list even when its archive
    entry is empty. ``best_fitness`` returns the filled neighbour with the
    highest fitness (earliest in the list on ties) or ``None`` when every
    neighbour is empty.
    """
    nb = graph.neighbors[focal]
    if strategy == SelectionStrategy.RANDOM:
        return int(nb[rng.integers(nb.size)])
    fit = archive.fitness[nb]
    j = int(np.argmax(fit))
    if fit[j] == -np.inf:
        return None
    return int(nb[j])
