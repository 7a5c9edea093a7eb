"""Learning-curve AUC, rank tests with Holm correction, and coupon-collector bounds."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

EULER_GAMMA = 0.5772156649015329
EXACT_PAIR_LIMIT = 64


def auc(trace, normalizer: float = 1.0) -> float:
    """Mean normalised fitness over a uniform checkpoint grid, times 1000.

    ``trace`` is a :class:`~monet.optimizers.RunTrace`, a ``(k, 2)``
    checkpoint array, or a 1-D curve of mean-fitness values.
    """
    if normalizer <= 0:
        raise ValueError("normalizer must be positive")
    curve = getattr(trace, "curve", None)
    if curve is None:
        arr = np.asarray(trace, dtype=float)
        curve = arr[:, 1] if arr.ndim == 2 else arr
    curve = np.asarray(curve, dtype=float)
    if curve.size < 2:
        raise ValueError("AUC needs at least two checkpoints")
    return float(np.mean(curve / normalizer) * 1000.0)


@dataclass(frozen=True)
class CoverageBound:
    nu: int
    p: float
    draws: int
    c: float
    expected_draws: float
    high_prob_draws: float
    expected_visits: float


def harmonic_number(nu: int) -> float:
    return math.fsum(1.0 / k for k in range(1, nu + 1))


def coupon_collector(nu: int, p: float = 0.99, M: int = 1_000_000, table_compatible: bool = False) -> CoverageBound:
    """Draw counts needed to visit all ``nu`` nodes under uniform sampling.

    ``expected_draws`` is ``nu * H_nu``; ``high_prob_draws`` is
    ``nu * (ln nu + c)`` with ``c = -ln(-ln p)``. With ``table_compatible``
    the constant is ``ln(1 / (1 - p))`` instead, which is ``ln 100`` at
    ``p = 0.99``, and ``expected_draws`` uses the leading terms
    ``nu * (ln nu + gamma)``; together these reproduce the commonly
    tabulated integers. ``expected_visits`` is ``M / nu``.
    """
    if int(nu) != nu or nu < 1:
        raise ValueError("nu must be a positive integer")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    nu = int(nu)
    c = math.log(1.0 / (1.0 - p)) if table_compatible else -math.log(-math.log(p))
    return CoverageBound(
        nu=nu,
        p=p,
        draws=M,
        c=c,
        expected_draws=nu * (math.log(nu) + EULER_GAMMA) if table_compatible else nu * harmonic_number(nu),
        high_prob_draws=nu * (math.log(nu) + c),
        expected_visits=M / nu,
    )


def coverage_probability(c: float) -> float:
    """Asymptotic probability that ``nu (ln nu + c)`` draws visit every node."""
    return math.exp(-math.exp(-c))


@dataclass(frozen=True)
class TestResult:
    u_statistic: float
    p_value: float
    adjusted_p: float | None = None
    method: str = "exact"
    alternative: str = "two-sided"

    __test__ = False  # not a pytest class


def midranks(values) -> np.ndarray:
    """1-based ranks with ties sharing the average of their positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


@lru_cache(maxsize=256)
def _null_u_distribution(pooled_ranks: tuple, n_a: int):
    """All equally likely U values for group a under random rank assignment."""
    offset = n_a * (n_a + 1) / 2
    us = [math.fsum(combo) - offset for combo in itertools.combinations(pooled_ranks, n_a)]
    return np.sort(np.array(us))


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(sample_a, sample_b, alternative: str = "two-sided", method: str = "auto") -> TestResult:
    """Mann-Whitney U test of ``sample_a`` against ``sample_b``.

    ``u_statistic`` counts pairs with ``a > b`` (ties count one half).
    ``alternative="greater"`` tests whether ``a`` tends to be larger.
    With ``method="auto"`` the exact permutation distribution of the
    observed midranks is used when ``len(a) * len(b) <= 64``; otherwise a
    normal approximation with tie-corrected variance and continuity
    correction.
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    if method not in ("auto", "exact", "asymptotic"):
        raise ValueError(f"unknown method {method!r}")
    n_a, n_b = a.size, b.size
    ranks = midranks(np.concatenate([a, b]))
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2)

    if method == "exact" or (method == "auto" and n_a * n_b <= EXACT_PAIR_LIMIT):
        null = _null_u_distribution(tuple(sorted(ranks.tolist())), n_a)
        total = null.size
        # U values are multiples of 1/2, so these comparisons are exact
        p_le = np.searchsorted(null, u, side="right") / total
        p_ge = (total - np.searchsorted(null, u, side="left")) / total
        used = "exact"
    else:
        n = n_a + n_b
        mu = n_a * n_b / 2.0
        _, counts = np.unique(ranks, return_counts=True)
        tie_term = float(np.sum(counts**3 - counts)) / (n * (n - 1))
        sigma = math.sqrt(n_a * n_b / 12.0 * ((n + 1) - tie_term))
        if sigma == 0.0:
            return TestResult(u, 1.0, method="asymptotic", alternative=alternative)
        p_ge = _normal_sf((u - mu - 0.5) / sigma)
        p_le = 1.0 - _normal_sf((u - mu + 0.5) / sigma)
        if alternative == "two-sided":
            z = max(abs(u - mu) - 0.5, 0.0) / sigma
            p_le = p_ge = _normal_sf(z)
        used = "asymptotic"

    if alternative == "greater":
        p = p_ge
    elif alternative == "less":
        p = p_le
    else:
        p = 2.0 * min(p_le, p_ge)
    return TestResult(u, float(min(1.0, p)), method=used, alternative=alternative)


def holm_bonferroni(p_values) -> np.ndarray:
    """Holm step-down adjusted p-values, returned in the input order."""
    p = np.asarray(p_values, dtype=float).ravel()
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    if m == 0:
        return p.copy()
    order = np.argsort(p, kind="stable")
    scaled = np.minimum(1.0, (m - np.arange(m)) * p[order])
    adjusted = np.empty(m)
    adjusted[order] = np.maximum.accumulate(scaled)
    return adjusted


def adjust(results: list[TestResult]) -> list[TestResult]:
    """Attach Holm-adjusted p-values to a family of test results."""
    adjusted = holm_bonferroni([r.p_value for r in results])
    return [
        TestResult(r.u_statistic, r.p_value, float(q), r.method, r.alternative)
        for r, q in zip(results, adjusted)
    ]
