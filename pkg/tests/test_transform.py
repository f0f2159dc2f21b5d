"""Transformation functions: closed forms, frozen oracle values, flags and curves."""

import json
import math
import pathlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcgrowth import ParameterError, PhiFunction, make_spec, spec_from_dict
from hcgrowth.transform import (
    PointwiseObjective,
    TransformPoint,
    _constrained,
    inner_constrained,
    parse_t_grid,
    sample_curve,
    solve_inner,
    transform,
    transform_binary,
    transform_compsum,
    transform_constrained,
)

ORACLE = json.loads((pathlib.Path(__file__).parent / "data" / "oracle_transform.json").read_text())


def logistic_T(t):
    return (1 - t) / 2 * math.log1p(-t) + (1 + t) / 2 * math.log1p(t)


class TestBinaryClosedForms:
    @pytest.mark.parametrize("t", [1e-4, 0.01, 0.2, 0.5, 0.9])
    def test_exponential(self, t):
        p = transform_binary(make_spec("margin", "exponential"), t)
        assert p.T == pytest.approx(1 - math.sqrt(1 - t * t), rel=1e-10, abs=1e-15)
        assert p.a_star == pytest.approx(0.5 * math.log((1 + t) / (1 - t)), rel=1e-8)

    def test_exponential_half(self):
        p = transform_binary(make_spec("margin", "exponential"), 0.5)
        assert p.T == pytest.approx(0.1339746, abs=1e-7)
        assert p.a_star == pytest.approx(0.5 * math.log(3), abs=1e-9)

    def test_exponential_against_frozen_grid(self):
        g = ORACLE["golden"]["exponential_t05"]
        p = transform_binary(make_spec("margin", "exponential"), g["t"])
        assert abs(p.T - g["T"]) <= 1e-10
        assert abs(p.a_star - g["a_star"]) <= g["u_step"]

    @pytest.mark.parametrize("t", [0.01, 0.3, 0.7])
    def test_logistic(self, t):
        p = transform_binary(make_spec("margin", "logistic"), t)
        assert p.T == pytest.approx(logistic_T(t), rel=1e-10)

    def test_logistic_dominates_half_square(self):
        for t in np.geomspace(1e-4, 0.99, 40):
            assert transform_binary(make_spec("margin", "logistic"), t).T >= t * t / 2

    @pytest.mark.parametrize("t", [0.05, 0.3, 0.8])
    def test_squared_hinge(self, t):
        assert transform_binary(make_spec("margin", "squared-hinge"), t).T == pytest.approx(t * t, rel=1e-10)

    def test_hinge(self):
        p = transform_binary(make_spec("margin", "hinge"), 0.3)
        assert abs(p.T - 0.3) <= 1e-12
        assert p.a_star == 1.0

    def test_zero(self):
        p = transform_binary(make_spec("margin", "exponential"), 0.0)
        assert (p.T, p.a_star) == (0.0, 0.0)

    def test_exponential_at_one_is_a_limit(self):
        p = transform_binary(make_spec("margin", "exponential"), 1.0)
        assert "limit" in p.flags
        assert p.T == pytest.approx(1.0, abs=1e-12)

    def test_bad_t(self):
        with pytest.raises(ParameterError):
            transform_binary(make_spec("margin", "hinge"), 1.5)
        with pytest.raises(ParameterError):
            transform_binary(make_spec("margin", "hinge"), float("nan"))

    def test_family_checked(self):
        with pytest.raises(ParameterError):
            transform_binary(make_spec("comp-sum", "neg-log", 3), 0.1)


class TestCompSum:
    @pytest.mark.parametrize("n", [2, 3, 7])
    def test_mae_linear(self, n):
        spec = make_spec("comp-sum", "mae-linear", n)
        for t in (0.01, 0.2, 0.6):
            p = transform_compsum(spec, t)
            assert abs(p.T - t / n) <= 1e-10
            assert p.tau_star == pytest.approx(1 / n)

    @pytest.mark.parametrize("n", [2, 3, 10])
    def test_neg_log_matches_logistic(self, n):
        for t in (0.05, 0.4):
            p = transform_compsum(make_spec("comp-sum", "neg-log", n), t)
            assert p.T == pytest.approx(logistic_T(t), rel=1e-9)

    def test_sum_exp_matches_exponential(self):
        p = transform_compsum(make_spec("comp-sum", "sum-exp-ratio", 5), 0.3)
        assert p.T == pytest.approx(1 - math.sqrt(1 - 0.09), rel=1e-9)
        assert p.tau_star == pytest.approx(0.5)

    def test_neg_log_against_fine_grid(self):
        g = ORACLE["golden"]["neg_log_n3_t05"]
        p = transform_compsum(make_spec("comp-sum", "neg-log", 3), g["t"])
        assert abs(p.T - g["T"]) <= 1e-8

    def test_tau_star_in_domain(self):
        curve = sample_curve(make_spec("comp-sum", "neg-log", 10), "log:1e-3:0.5:12")
        for p in curve.samples:
            assert 0.1 - 1e-15 <= p.tau_star <= 0.5 + 1e-15

    def test_zero(self):
        assert transform_compsum(make_spec("comp-sum", "neg-log", 2), 0.0).T == 0.0


class TestConstrained:
    def test_exponential_binary(self):
        p = transform_constrained(make_spec("constrained", "constrained-exp", 2), 0.5)
        assert p.T == pytest.approx(1 - math.sqrt(0.75), abs=1e-9)
        assert p.tau_star == 0.0

    @pytest.mark.parametrize("n", [3, 5])
    def test_exponential_closed_form(self, n):
        spec = make_spec("constrained", "constrained-exp", n)
        c = spec.constant_c
        for t in (0.05, 0.3):
            p = transform_constrained(spec, t)
            assert p.T == pytest.approx(c - math.sqrt(c * c - t * t), rel=1e-9)

    @pytest.mark.parametrize("pid", ["constrained-square", "constrained-squared-hinge"])
    def test_square_forms(self, pid):
        spec = make_spec("constrained", pid, 3)
        for t in (0.05, 0.4):
            assert transform_constrained(spec, t).T == pytest.approx(t * t / spec.constant_c, rel=1e-9)

    def test_hinge_linear(self):
        spec = make_spec("constrained", "constrained-hinge", 3)
        for t in (0.01, 0.02, 0.04):
            assert transform_constrained(spec, t).T == pytest.approx(t, rel=1e-12)

    def test_rescaling_identity(self):
        spec = make_spec("constrained", "constrained-exp", 4)
        c = spec.constant_c
        for s in (0.05, 0.2, 0.5):
            np.testing.assert_allclose(transform_constrained(spec, c * s).T, c * inner_constrained(spec, s).T,
                                       rtol=1e-9)

    def test_truncation_suspect_flag(self):
        # a decreasing Phi pushes the outer argmin to the truncation point
        dec = PhiFunction("decreasing-exp", "constrained", lambda u: np.exp(-np.asarray(u, float)),
                          lambda u: -np.exp(-np.asarray(u, float)), lambda u: np.exp(-np.asarray(u, float)))
        p = _constrained(dec, 0.3, 1.5, 2.0, 64)
        assert "truncation-suspect" in p.flags

    def test_bad_truncation(self):
        with pytest.raises(ParameterError):
            transform_constrained(make_spec("constrained", "constrained-exp", 3), 0.1, truncation_A=0.0)


class TestFrozenOracle:
    """Refined solver against the brute-force grid values stored in tests/data."""

    @pytest.mark.parametrize("row", ORACLE["rows"], ids=lambda r: f"{r['spec_id']}@{r['t']}")
    def test_agrees(self, row):
        p = transform(spec_from_dict(row["spec"]), row["t"])
        assert abs(p.T - row["T"]) <= 1e-6


class TestInnerSolver:
    def test_polyhedral_candidates(self):
        obj = PointwiseObjective(make_spec("margin", "hinge").phi, 0.35, 0.65, np.zeros(1))
        sol = solve_inner(obj)
        assert sol.u[0] == 1.0 and sol.iterations == 0

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.01, 0.95))
    def test_gain_nonnegative(self, t):
        for spec in (make_spec("margin", "logistic"), make_spec("comp-sum", "sum-exp-ratio", 3)):
            assert transform(spec, t).T >= 0.0


class TestCurves:
    def test_exponential_curve(self):
        curve = sample_curve(make_spec("margin", "exponential"), "log:1e-4:0.5:40")
        assert len(curve.valid()) == 40
        assert curve.is_monotone()

    def test_hinge_curve_exact(self):
        curve = sample_curve(make_spec("margin", "hinge"), "lin:0.01:1:25")
        np.testing.assert_allclose(curve.T, curve.t, atol=1e-12, rtol=0)

    def test_errors_become_flagged_samples(self):
        curve = sample_curve(make_spec("constrained", "constrained-exp", 3), [0.1, 0.2], truncation_A=-1.0)
        assert all(p.flags == ("error:parameter-error",) and math.isnan(p.T) for p in curve.samples)
        assert curve.valid() == []

    def test_grid_must_increase(self):
        with pytest.raises(ParameterError):
            sample_curve(make_spec("margin", "hinge"), [0.2, 0.1])

    def test_parse_grid(self):
        arr, desc = parse_t_grid("log:1e-4:0.5:40")
        assert arr.size == 40 and desc["kind"] == "log"
        np.testing.assert_allclose(arr[[0, -1]], [1e-4, 0.5])
        arr, desc = parse_t_grid("0.1, 0.2,0.3")
        np.testing.assert_allclose(arr, [0.1, 0.2, 0.3])
        with pytest.raises(ParameterError):
            parse_t_grid("log:0:1")

    def test_point_ok(self):
        assert TransformPoint(0.1, 0.01, 0.1).ok
        assert not TransformPoint(0.1, float("nan"), None, None, ("error:domain-error",)).ok
