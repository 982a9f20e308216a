"""Exponential integral, inverse table, bracketing and quadrature helpers."""

import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from levykle.special import (
    BracketError,
    MonotoneInverseTable,
    QuadratureError,
    build_e1_inverse,
    default_e1_inverse,
    exp_integral_e1,
    invert_monotone,
    quad,
)

# Reference values computed with mpmath at 50 significant digits.
E1_AT_ONE = 0.21938393439552026
E1_INV_AT_TWO = 0.08237202962072026
E1_INV_AT_DOMAIN_HI = 1.0044962730171222e-20
E1_INV_AT_DOMAIN_LO = 44.99995139515026


class TestExpIntegral:
    def test_reference_value_at_one(self):
        assert exp_integral_e1(1.0) == pytest.approx(E1_AT_ONE, rel=1e-14)

    def test_agrees_with_scipy_across_range(self):
        xs = np.logspace(-18, math.log10(600), 400)
        ours = exp_integral_e1(xs)
        ref = scipy.special.exp1(xs)
        assert np.max(np.abs(ours - ref) / np.abs(ref)) < 5e-13

    def test_series_and_continued_fraction_meet_smoothly(self):
        # The implementation switches branches at x = 1.
        for x in (1.0 - 1e-12, 1.0, 1.0 + 1e-12):
            assert exp_integral_e1(x) == pytest.approx(E1_AT_ONE, rel=1e-9)

    def test_vector_input_matches_scalars(self):
        xs = np.array([1e-6, 0.5, 1.0, 3.0, 50.0])
        vec = exp_integral_e1(xs)
        assert vec.shape == xs.shape
        for x, v in zip(xs, vec):
            assert exp_integral_e1(float(x)) == v

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
    def test_rejects_nonpositive_and_nonfinite(self, bad):
        with pytest.raises(ValueError):
            exp_integral_e1(bad)

    @given(st.floats(min_value=1e-18, max_value=600.0),
           st.floats(min_value=1e-18, max_value=600.0))
    @settings(max_examples=80, deadline=None)
    def test_strictly_decreasing(self, a, b):
        if a == b:
            return
        lo, hi = min(a, b), max(a, b)
        assert exp_integral_e1(lo) > exp_integral_e1(hi)


class TestInverseTable:
    def test_default_table_shape_and_spacing(self, e1_table):
        assert len(e1_table.breakpoints) == 200_000
        assert e1_table.domain_lo == 6.226e-22
        assert e1_table.domain_hi == 45.47
        assert e1_table.max_gap <= 0.00231

    def test_reference_inversions(self, e1_table):
        assert e1_table(2.0) == pytest.approx(E1_INV_AT_TWO, rel=1e-12)
        assert e1_table(e1_table.domain_hi) == pytest.approx(E1_INV_AT_DOMAIN_HI, rel=1e-9)
        assert e1_table(e1_table.domain_lo) == pytest.approx(E1_INV_AT_DOMAIN_LO, rel=1e-12)

    def test_roundtrip_identity_over_tabulated_range(self, e1_table):
        xs = np.logspace(math.log10(e1_table.values.min() * 1.01),
                         math.log10(e1_table.values.max() * 0.99), 500)
        err = np.abs(e1_table(exp_integral_e1(xs)) - xs) / np.maximum(1.0, xs)
        assert err.max() <= 1e-8

    def test_clamp_above_domain_returns_smallest_x(self, e1_table):
        # Larger y than tabulated means a jump smaller than the floor.
        assert e1_table(1e3) == e1_table.values[-1]

    def test_clamp_below_domain_returns_zero(self, e1_table):
        assert e1_table(1e-30) == 0.0
        assert e1_table(0.0) == 0.0

    def test_vectorized_matches_scalar_with_clamps(self, e1_table):
        ys = np.array([1e-30, 6.226e-22, 1e-5, 2.0, 45.47, 1e3])
        vec = e1_table(ys)
        assert np.array_equal(vec, np.array([e1_table(float(y)) for y in ys]))

    def test_rejects_nan(self, e1_table):
        with pytest.raises(ValueError):
            e1_table(math.nan)

    @given(y=st.floats(min_value=1e-19, max_value=45.46))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_property(self, e1_table, y):
        x = e1_table(y)
        assert x > 0.0
        assert abs(exp_integral_e1(x) - y) <= 1e-8 * max(1.0, y)

    def test_custom_build_respects_spacing_bound(self):
        with pytest.raises(ValueError, match="spacing"):
            build_e1_inverse(6.226e-22, 45.47, 2000)

    def test_custom_build_small_domain(self):
        table = build_e1_inverse(1e-3, 1.0, 5000)
        xs = np.logspace(math.log10(table.values.min() * 1.01),
                         math.log10(table.values.max() * 0.99), 50)
        err = np.abs(table(exp_integral_e1(xs)) - xs) / np.maximum(1.0, xs)
        assert err.max() <= 1e-8

    def test_table_validates_monotonicity(self):
        with pytest.raises(ValueError):
            MonotoneInverseTable(
                breakpoints=np.array([0.1, 0.3, 0.2]),
                values=np.array([3.0, 2.0, 1.0]),
                domain_lo=0.1, domain_hi=0.3,
                forward=exp_integral_e1,
                forward_derivative=lambda x: -math.exp(-x) / x,
                spacing_bound=1.0,
            )

    def test_default_table_is_cached(self):
        assert default_e1_inverse() is default_e1_inverse()


class TestInvertMonotone:
    def test_inverse_cube(self):
        # The helper inverts decreasing maps, the shape every tail integral has.
        root = invert_monotone(lambda x: x**-3, 0.125, bracket=(0.1, 10.0))
        assert root == pytest.approx(2.0, rel=1e-12)

    def test_decreasing_function(self):
        root = invert_monotone(exp_integral_e1, 2.0, bracket=(1e-6, 10.0))
        assert root == pytest.approx(E1_INV_AT_TWO, rel=1e-10)

    def test_out_of_bracket_raises(self):
        with pytest.raises(BracketError):
            invert_monotone(lambda x: x**-3, 1e9, bracket=(0.1, 10.0))


class TestQuad:
    def test_polynomial(self):
        assert quad(lambda x: x * x, 0.0, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_zero_integrand(self):
        assert quad(lambda x: 0.0, 0.0, 1.0) == 0.0

    def test_complex_integrand(self):
        val = quad(lambda t: np.exp(1j * t), 0.0, math.pi)
        assert val == pytest.approx(complex(0.0, 2.0), abs=1e-12)

    def test_infinite_interval(self):
        assert quad(lambda x: math.exp(-x), 0.0, math.inf) == pytest.approx(1.0, rel=1e-10)

    def test_divergent_raises(self):
        with pytest.raises(QuadratureError):
            quad(lambda x: 1.0 / x, 0.0, 1.0)
