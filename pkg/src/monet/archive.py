"""Per-task elite storage with the elitist (>=) admission rule."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


class Archive:
    """One optional elite per task.

    Empty entries hold ``-inf`` fitness, which lets neighbour selection take
    a plain argmax. ``eval_count`` is maintained by the optimizer loop and
    counts fitness-function calls.
    """

    def __init__(self, n_tasks: int, solution_dim: int):
        if n_tasks < 1:
            raise ValueError("archive needs at least one task")
        self.solutions = np.zeros((n_tasks, solution_dim))
        self.fitness = np.full(n_tasks, -np.inf)
        self.filled = np.zeros(n_tasks, dtype=bool)
        self.fill_order = np.zeros(n_tasks, dtype=np.int64)
        self.n_filled = 0
        self.eval_count = 0

    @property
    def n(self) -> int:
        return self.fitness.size

    @property
    def filled_tasks(self) -> np.ndarray:
        """Indices of non-empty entries, in the order they were first filled."""
        return self.fill_order[: self.n_filled]

    def is_empty(self, task: int) -> bool:
        return not self.filled[task]

    def get(self, task: int):
        """Return ``(solution, fitness)`` or ``None`` for an empty entry."""
        if not self.filled[task]:
            return None
        return self.solutions[task].copy(), float(self.fitness[task])

    def try_insert(self, task: int, candidate, fitness: float) -> bool:
        """Store the candidate iff the entry is empty or ``fitness >= current``."""
        if self.filled[task]:
            if fitness < self.fitness[task]:
                return False
        else:
            self.filled[task] = True
            self.fill_order[self.n_filled] = task
            self.n_filled += 1
        self.solutions[task] = candidate
        self.fitness[task] = fitness
        return True

    def mean_fitness(self, empty_value: float = 0.0) -> float:
        return float(np.where(self.filled, self.fitness, empty_value).mean())

    def snapshot(self) -> "Archive":
        other = Archive.__new__(Archive)
        other.solutions = self.solutions.copy()
        other.fitness = self.fitness.copy()
        other.filled = self.filled.copy()
        other.fill_order = self.fill_order.copy()
        other.n_filled = self.n_filled
        other.eval_count = self.eval_count
        return other

    def to_csv(self, path, tasks: np.ndarray | None = None) -> Path:
        """One row per task: index, task parameters, genes, fitness (empty if unfilled)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tdim = 0 if tasks is None else tasks.shape[1]
        sdim = self.solutions.shape[1]
        header = ["task"] + [f"tau_{j}" for j in range(tdim)] + [f"theta_{j}" for j in range(sdim)] + ["fitness"]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(self.n):
                row = [str(i)]
                if tasks is not None:
                    row += [f"{v:.17g}" for v in tasks[i]]
                if self.filled[i]:
                    row += [f"{v:.17g}" for v in self.solutions[i]] + [f"{self.fitness[i]:.17g}"]
                else:
                    row += [""] * (sdim + 1)
                writer.writerow(row)
        return path
