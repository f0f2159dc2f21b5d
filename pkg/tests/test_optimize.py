"""Scalar and vectorized one-dimensional minimizers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcgrowth.optimize import (
    bisect_root,
    bracket_by_doubling,
    golden_section,
    golden_section_vec,
    safeguarded_newton,
)


class TestGoldenSection:
    def test_quadratic(self):
        x, fx, it = golden_section(lambda u: (u - 0.3) ** 2, -1.0, 2.0, tol=1e-10)
        assert x == pytest.approx(0.3, abs=1e-9)
        assert it > 0

    def test_minimum_on_boundary_is_exact(self):
        x, fx, _ = golden_section(lambda u: u, 0.25, 1.0)
        assert x == 0.25 and fx == 0.25

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-5, 5), st.floats(0.1, 10))
    def test_convex_family(self, c, k):
        x, _, _ = golden_section(lambda u: k * math.cosh(u - c), -8.0, 8.0, tol=1e-9)
        assert abs(x - c) < 1e-6

    def test_vectorized_matches_scalar(self):
        centers = np.linspace(-2, 2, 9)
        x, fx, a, b = golden_section_vec(lambda u: (u - centers) ** 2, np.full(9, -3.0), np.full(9, 3.0), tol=1e-10)
        np.testing.assert_allclose(x, centers, atol=1e-9)
        assert np.all(b - a <= 1e-10)
        assert np.all((a <= x) & (x <= b))


class TestNewton:
    def test_converges_to_stationary_point(self):
        df = lambda u: np.exp(u) - 2.0
        d2f = lambda u: np.exp(u)
        x, g, _ = safeguarded_newton(df, d2f, np.array([0.0]), np.array([-5.0]), np.array([5.0]))
        np.testing.assert_allclose(x, math.log(2.0), rtol=1e-12)
        assert g[0] <= 1e-12

    def test_falls_back_to_bisection_on_flat_curvature(self):
        # zero curvature makes every Newton step invalid
        df = lambda u: u - 0.7
        d2f = lambda u: np.zeros_like(u)
        x, g, _ = safeguarded_newton(df, d2f, np.array([0.0]), np.array([-1.0]), np.array([1.0]), max_iter=200)
        np.testing.assert_allclose(x, 0.7, atol=1e-12)

    def test_bisect_root(self):
        r = bisect_root(lambda u: u ** 3 - 2.0, np.array([0.0]), np.array([2.0]))
        np.testing.assert_allclose(r, 2.0 ** (1 / 3), rtol=1e-14)


class TestBracket:
    def test_grows_until_sign_change(self):
        B, lo_ok, hi_ok = bracket_by_doubling(lambda u: u - 5.0, (1,), 1.0, 64.0)
        assert B[0] == 8.0 and lo_ok[0] and hi_ok[0]

    def test_limit_flags_missing_side(self):
        B, lo_ok, hi_ok = bracket_by_doubling(lambda u: -np.exp(-u), (2,), 1.0, 64.0)
        np.testing.assert_array_equal(B, 64.0)
        assert lo_ok.all() and not hi_ok.any()
