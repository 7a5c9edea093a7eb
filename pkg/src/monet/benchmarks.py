"""Closed-form benchmark fitness functions: archery, arm and cartpole.

Every benchmark is maximised. ``BENCHMARKS`` maps the CLI names to
:class:`Benchmark` records carrying the task space, the solution space and
the fitness ceiling used to normalise learning curves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .spaces import BoundedSpace

# archery
ARROW_SPEED = 70.0
GRAVITY = 9.8
RING_WIDTH = 0.061
AIM_LIMIT = math.pi / 12

# arm
ARM_DOFS = 10
ARM_TARGET = (0.5, 0.5)

# cartpole, CartPole-v1 defaults
CART_MASS = 1.0
FORCE_MAG = 10.0
TIME_STEP = 0.02
ANGLE_LIMIT = 12 * 2 * math.pi / 360
POSITION_LIMIT = 2.4
N_ROLLOUTS = 10
T_MAX = 1000
WEIGHT_RANGE = 5.0
MLP_SIZE = 2 * (4 + 1) + 2 * (2 + 1)


def archery_offset(solution, task):
    """Horizontal and vertical miss distance on the target plane, or ``None``.

    ``task`` is ``(distance, wind)``. The arrow leaves the origin at
    constant speed under gravity and a constant lateral wind acceleration.
    ``None`` means the arrow never reaches the plane.
    """
    yaw, pitch = float(solution[0]), float(solution[1])
    distance, wind = float(task[0]), float(task[1])
    vx = -ARROW_SPEED * math.sin(yaw)
    vy = ARROW_SPEED * math.cos(yaw) * math.cos(pitch)
    vz = ARROW_SPEED * math.cos(yaw) * math.sin(pitch)
    if vy <= 0.0:
        return None
    t = distance / vy
    return 0.5 * wind * t * t + vx * t, -0.5 * GRAVITY * t * t + vz * t


def archery_fitness(solution, task) -> float:
    """Ring score in {0, 0.1, ..., 1} of an arrow shot at ``(yaw, pitch)``."""
    offset = archery_offset(solution, task)
    if offset is None:
        return 0.0
    r = math.hypot(*offset)
    return max(0, 10 - math.floor(r / RING_WIDTH)) / 10


@njit(cache=True)
def _arm_tip(theta, length, alpha_max):
    scale = 2.0 * math.pi * alpha_max / theta.shape[0]
    link = length / theta.shape[0]
    heading = 0.0
    x = 0.0
    y = 0.0
    for k in range(theta.shape[0]):
        heading += (theta[k] - 0.5) * scale
        x += link * math.cos(heading)
        y += link * math.sin(heading)
    return x, y


def arm_end_effector(solution, task) -> tuple[float, float]:
    """Planar forward kinematics: base at the origin, first link along +x,
    joint angles accumulate along the chain."""
    theta = np.asarray(solution, dtype=np.float64)
    if theta.shape != (ARM_DOFS,):
        raise ValueError(f"arm solutions have {ARM_DOFS} genes")
    return _arm_tip(theta, float(task[0]), float(task[1]))


def arm_fitness(solution, task) -> float:
    """``exp(-distance)`` between the arm tip and the fixed target (0.5, 0.5)."""
    x, y = arm_end_effector(solution, task)
    return math.exp(-math.hypot(x - ARM_TARGET[0], y - ARM_TARGET[1]))


@njit(cache=True)
def cartpole_step(x, x_dot, phi, phi_dot, force, pole_mass, pole_length):
    """One explicit Euler step (dt = 0.02 s) of the cart-pole equations."""
    total = CART_MASS + pole_mass
    sin_p = math.sin(phi)
    cos_p = math.cos(phi)
    phi_acc = (GRAVITY * sin_p + cos_p * (-force - pole_mass * pole_length * phi_dot * phi_dot * sin_p) / total) / (
        pole_length * (4.0 / 3.0 - pole_mass * cos_p * cos_p / total)
    )
    x_acc = (force + pole_mass * pole_length * (phi_dot * phi_dot * sin_p - phi_acc * cos_p)) / total
    return (
        x + TIME_STEP * x_dot,
        x_dot + TIME_STEP * x_acc,
        phi + TIME_STEP * phi_dot,
        phi_dot + TIME_STEP * phi_acc,
    )


@njit(cache=True)
def _policy_force(w, x, x_dot, phi, phi_dot):
    h0 = math.tanh(w[0] * x + w[1] * x_dot + w[2] * phi + w[3] * phi_dot + w[4])
    h1 = math.tanh(w[5] * x + w[6] * x_dot + w[7] * phi + w[8] * phi_dot + w[9])
    out0 = w[10] * h0 + w[11] * h1 + w[12]
    out1 = w[13] * h0 + w[14] * h1 + w[15]
    # tie goes to the positive force
    return FORCE_MAG if out1 >= out0 else -FORCE_MAG


@njit(cache=True)
def _balanced_steps(w, start, pole_mass, pole_length, t_max):
    x, x_dot, phi, phi_dot = start[0], start[1], start[2], start[3]
    steps = 0
    while steps < t_max:
        force = _policy_force(w, x, x_dot, phi, phi_dot)
        x, x_dot, phi, phi_dot = cartpole_step(x, x_dot, phi, phi_dot, force, pole_mass, pole_length)
        steps += 1
        if not (math.isfinite(x) and math.isfinite(x_dot) and math.isfinite(phi) and math.isfinite(phi_dot)):
            break
        if abs(phi) >= ANGLE_LIMIT or abs(x) >= POSITION_LIMIT:
            break
    return steps


@njit(cache=True)
def _mean_balanced_steps(w, starts, pole_mass, pole_length, t_max):
    total = 0
    for k in range(starts.shape[0]):
        total += _balanced_steps(w, starts[k], pole_mass, pole_length, t_max)
    return total / starts.shape[0]


def genes_to_weights(solution, weight_range: float = WEIGHT_RANGE) -> np.ndarray:
    """Affine map of genes in [0, 1] onto weights in [-weight_range, weight_range]."""
    return (2.0 * np.asarray(solution, dtype=float) - 1.0) * weight_range


def rollout_starts(seed, n_rollouts: int = N_ROLLOUTS) -> np.ndarray:
    """Initial states ``U(-0.05, 0.05)^4`` for each rollout of one evaluation."""
    return np.random.default_rng(seed).uniform(-0.05, 0.05, size=(n_rollouts, 4))


def cartpole_fitness(solution, task, seed=0, n_rollouts: int = N_ROLLOUTS, t_max: int = T_MAX,
                     weight_range: float = WEIGHT_RANGE) -> float:
    """Mean balanced steps of the 16-weight MLP controller over ``n_rollouts`` episodes.

    ``task`` is ``(pole_mass, pole_length)``. A step counts when it is
    executed, including the one that ends the episode, so a controller
    that never fails scores ``t_max``.
    """
    w = genes_to_weights(solution, weight_range)
    starts = rollout_starts(seed, n_rollouts)
    return float(_mean_balanced_steps(w, starts, float(task[0]), float(task[1]), int(t_max)))


@dataclass(frozen=True)
class Benchmark:
    name: str
    task_space: BoundedSpace
    solution_space: BoundedSpace
    fitness: Callable
    normalizer: float
    stochastic: bool = False

    def __call__(self, solution, task, seed=None) -> float:
        if self.stochastic:
            return self.fitness(solution, task, 0 if seed is None else seed)
        return self.fitness(solution, task)


BENCHMARKS = {
    "archery": Benchmark(
        "archery",
        BoundedSpace([5.0, -10.0], [40.0, 10.0]),
        BoundedSpace.box(-AIM_LIMIT, AIM_LIMIT, 2),
        archery_fitness,
        normalizer=1.0,
    ),
    "arm": Benchmark(
        "arm",
        BoundedSpace.box(0.0, 1.0, 2),
        BoundedSpace.box(0.0, 1.0, ARM_DOFS),
        arm_fitness,
        normalizer=1.0,
    ),
    "cartpole": Benchmark(
        "cartpole",
        BoundedSpace([0.05, 0.3], [0.5, 1.2]),
        BoundedSpace.box(0.0, 1.0, MLP_SIZE),
        cartpole_fitness,
        normalizer=float(T_MAX),
        stochastic=True,
    ),
}


def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None
