import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monet.operators import OperatorParams, gaussian_mutate, iso_line_dd, sbx_beta, sbx_children, sbx_crossover
from monet.spaces import BoundedSpace

UNIT1 = BoundedSpace([0.0], [1.0])


class ZeroNormals:
    """Generator stand-in whose normal draws are all zero."""

    def standard_normal(self, size=None):
        return np.zeros(size) if size is not None else 0.0


class ConstNormals:
    def __init__(self, value):
        self.value = value

    def standard_normal(self, size=None):
        return np.full(size, self.value) if size is not None else self.value


def test_params_defaults_and_validation():
    p = OperatorParams()
    assert p.eta_c == 10.0 and p.iso_sigma1 == 0.01 and p.iso_sigma2 == 0.2
    with pytest.raises(ValueError):
        OperatorParams(sigma_m=0.0)
    with pytest.raises(ValueError):
        OperatorParams(eta_c=-1.0)


def test_mutation_with_zero_noise_is_identity():
    space = BoundedSpace.box(-1.0, 1.0, 4)
    parent = np.array([0.3, -0.2, 0.9, 0.0])
    np.testing.assert_array_equal(gaussian_mutate(parent, space, 0.1, ZeroNormals()), parent)


def test_mutation_clips_at_upper_bound():
    space = BoundedSpace.box(0.0, 2.0, 3)
    child = gaussian_mutate(space.upper.copy(), space, 0.1, ConstNormals(50.0))
    np.testing.assert_array_equal(child, space.upper)


def test_mutation_offset_std():
    # unclipped offsets are eps itself; measured away from the bounds
    rng = np.random.default_rng(0)
    wide = BoundedSpace([-100.0], [101.0])
    sigma_m = 0.1 / wide.span[0]  # absolute std 0.1, as on [0, 1]
    offsets = np.array([gaussian_mutate(np.array([0.5]), wide, sigma_m, rng)[0] - 0.5 for _ in range(100_000)])
    assert abs(offsets.std(ddof=1) - 0.1) <= 0.002


def test_mutation_std_on_unit_interval_before_clipping():
    rng = np.random.default_rng(1)
    eps = np.array([rng.standard_normal(1)[0] * 0.1 * UNIT1.span[0] for _ in range(100_000)])
    rng = np.random.default_rng(1)
    kids = np.array([gaussian_mutate(np.array([0.5]), UNIT1, 0.1, rng)[0] for _ in range(100_000)])
    inside = (eps > -0.5) & (eps < 0.5)
    np.testing.assert_allclose(kids[inside] - 0.5, eps[inside], atol=1e-15)
    assert abs(eps.std(ddof=1) - 0.1) <= 0.002


def test_sbx_identical_parents_fixed_point():
    space = BoundedSpace.box(0.0, 1.0, 5)
    a = np.array([0.1, 0.5, 0.9, 0.0, 1.0])
    rng = np.random.default_rng(2)
    for _ in range(100):
        np.testing.assert_array_equal(sbx_crossover(a, a.copy(), space, 10.0, rng), a)


def test_sbx_beta_at_half_reproduces_parents():
    assert sbx_beta(0.5, 10.0) == pytest.approx(1.0)
    c1, c2 = sbx_children(np.array([0.2]), np.array([0.8]), np.array([0.5]), 10.0)
    np.testing.assert_allclose(c1, [0.2])
    np.testing.assert_allclose(c2, [0.8])


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(-10, 10),
    b=st.floats(-10, 10),
    u=st.floats(0.0, 0.999999),
    eta=st.floats(0.5, 50),
)
def test_sbx_mean_preservation(a, b, u, eta):
    c1, c2 = sbx_children(np.array([a]), np.array([b]), np.array([u]), eta)
    assert (c1[0] + c2[0]) / 2 == pytest.approx((a + b) / 2, abs=1e-9)


def test_sbx_child_in_bounds_and_uses_parent_genes():
    space = BoundedSpace.box(0.0, 1.0, 6)
    rng = np.random.default_rng(3)
    a, b = rng.random(6), rng.random(6)
    for _ in range(1000):
        c = sbx_crossover(a, b, space, 10.0, rng)
        assert space.contains(c)


def test_sbx_draw_order():
    space = BoundedSpace.box(0.0, 1.0, 3)
    a, b = np.array([0.2, 0.4, 0.6]), np.array([0.8, 0.1, 0.5])
    child = sbx_crossover(a, b, space, 10.0, np.random.default_rng(4))
    rng = np.random.default_rng(4)
    u, mask, coin = rng.random(3), rng.random(3) < 0.5, rng.random() < 0.5
    c1, c2 = sbx_children(a, b, u, 10.0)
    expect = np.clip(np.where(mask, c1 if coin else c2, a), 0.0, 1.0)
    np.testing.assert_allclose(child, expect, atol=1e-15)


def test_iso_line_degenerate_noise():
    space = BoundedSpace.box(0.0, 1.0, 3)
    a, b = np.array([0.2, 0.4, 0.6]), np.array([0.9, 0.1, 0.3])
    rng = np.random.default_rng(5)
    np.testing.assert_array_equal(iso_line_dd(a, b, space, 0.0, 0.0, rng), a)


def test_iso_line_equal_parents_is_isotropic_step():
    space = BoundedSpace.box(0.0, 1.0, 3)
    a = np.array([0.2, 0.4, 0.6])
    child = iso_line_dd(a, a.copy(), space, 0.01, 0.2, np.random.default_rng(6))
    expect = np.clip(a + 0.01 * np.random.default_rng(6).standard_normal(3), 0, 1)
    np.testing.assert_allclose(child, expect, atol=1e-15)


def test_iso_line_variance_sum():
    wide = BoundedSpace([-50.0], [50.0])
    a, b = np.array([0.3]), np.array([0.7])
    rng = np.random.default_rng(7)
    kids = np.array([iso_line_dd(a, b, wide, 0.01, 0.2, rng)[0] for _ in range(100_000)])
    expect = 0.01**2 + 0.2**2 * (b[0] - a[0]) ** 2
    assert abs(kids.var(ddof=1) / expect - 1) <= 0.01
