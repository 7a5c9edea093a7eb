"""Variation operators.

All operators take an explicit ``numpy.random.Generator`` and return a new
in-bounds solution vector; parents are never modified.

Random draws per call, in order:

* ``gaussian_mutate``: ``dim`` standard normals.
* ``sbx_crossover``: ``dim`` uniforms (spread), ``dim`` uniforms (crossover
  mask), one uniform (which child is returned).
* ``iso_line_dd``: ``dim`` standard normals (isotropic), one standard normal
  (line step).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spaces import BoundedSpace

SBX_GENE_PROB = 0.5


@dataclass(frozen=True)
class OperatorParams:
    sigma_m: float = 0.1
    eta_c: float = 10.0
    iso_sigma1: float = 0.01
    iso_sigma2: float = 0.2

    def __post_init__(self):
        for name in ("sigma_m", "eta_c", "iso_sigma1", "iso_sigma2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


def gaussian_mutate(parent, space: BoundedSpace, sigma_m: float, rng: np.random.Generator) -> np.ndarray:
    """``clip(parent + eps)`` with ``eps_i ~ N(0, (sigma_m * span_i)^2)``."""
    eps = rng.standard_normal(space.dim) * (sigma_m * space.span)
    return np.clip(parent + eps, space.lower, space.upper)


def sbx_beta(u, eta_c: float):
    """Spread factor of simulated binary crossover for uniform draws ``u``."""
    u = np.asarray(u, dtype=float)
    # u < 1 for generator draws, so the upper branch never divides by zero
    with np.errstate(divide="ignore"):
        base = np.where(u <= 0.5, 2.0 * u, 0.5 / (1.0 - u))
    return base ** (1.0 / (eta_c + 1.0))


def sbx_children(a, b, u, eta_c: float):
    """Both unclipped SBX children of parents ``a`` and ``b``."""
    beta = sbx_beta(u, eta_c)
    c1 = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b)
    c2 = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b)
    return c1, c2


def sbx_crossover(parent_a, parent_b, space: BoundedSpace, eta_c: float, rng: np.random.Generator) -> np.ndarray:
    """Single SBX offspring.

    Each gene is crossed with probability 0.5; uncrossed genes are copied
    from ``parent_a``. One of the two SBX children is returned, chosen by a
    fair coin shared across genes.
    """
    dim = space.dim
    u = rng.random(dim)
    crossed = rng.random(dim) < SBX_GENE_PROB
    first = rng.random() < 0.5
    beta = sbx_beta(u, eta_c)
    if not first:
        beta = -beta
    # c1 = mid + beta * half_gap, c2 = mid - beta * half_gap
    child = 0.5 * (parent_a + parent_b) + (0.5 * beta) * (parent_a - parent_b)
    child = np.where(crossed, child, parent_a)
    return np.clip(child, space.lower, space.upper)


def iso_line_dd(parent_a, parent_b, space: BoundedSpace, sigma1: float, sigma2: float,
                rng: np.random.Generator) -> np.ndarray:
    """Isotropic Gaussian step plus a random step along ``parent_b - parent_a``."""
    iso = rng.standard_normal(space.dim)
    line = rng.standard_normal()
    child = parent_a + sigma1 * iso + (sigma2 * line) * (parent_b - parent_a)
    return np.clip(child, space.lower, space.upper)
