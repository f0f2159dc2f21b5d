"""Loss library: values, derivatives, spec handling and regularity checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcgrowth import (
    ConstraintError,
    DomainError,
    NotFoundError,
    ParameterError,
    SchemaError,
    eval_loss,
    gce_spec,
    get_phi,
    loss_matrix,
    make_spec,
    predict,
    spec_from_dict,
    verify_regularity,
)
from hcgrowth.phi import PHI_IDS

ALL_ENTRIES = [
    ("margin", "exponential", None), ("margin", "logistic", None), ("margin", "squared-hinge", None),
    ("margin", "hinge", None), ("comp-sum", "neg-log", None), ("comp-sum", "sum-exp-ratio", None),
    ("comp-sum", "mae-linear", None), ("comp-sum", "comp-sum-power", 0.5), ("comp-sum", "comp-sum-power", 1.5),
    ("constrained", "constrained-exp", None), ("constrained", "constrained-square", None),
    ("constrained", "constrained-squared-hinge", None), ("constrained", "constrained-hinge", None),
]


class TestEvalLoss:
    def test_exponential_at_zero(self):
        assert eval_loss(make_spec("margin", "exponential"), 0.0, +1) == 1.0

    def test_neg_log_uniform_softmax(self):
        v = eval_loss(make_spec("comp-sum", "neg-log", 2), [0.0, 0.0], 1)
        assert v == pytest.approx(math.log(2), abs=1e-15)

    def test_constrained_exp_zero_scores(self):
        spec = make_spec("constrained", "constrained-exp", 3)
        assert eval_loss(spec, [0.0, 0.0, 0.0], 1) == pytest.approx(2.0, abs=1e-15)

    def test_constrained_exp_direct_formula(self):
        spec = make_spec("constrained", "constrained-exp", 3)
        h = np.array([0.4, -0.1, -0.3])
        direct = np.exp(h[0]) + np.exp(h[2])
        assert eval_loss(spec, h, 1) == pytest.approx(direct, rel=1e-15)

    def test_power_one_matches_neg_log(self):
        rng = np.random.default_rng(0)
        for n in (2, 3, 5):
            a = make_spec("comp-sum", "comp-sum-power", n, 1.0)
            b = make_spec("comp-sum", "neg-log", n)
            for _ in range(100):
                h = rng.uniform(-4, 4, n)
                y = int(rng.integers(n))
                assert abs(eval_loss(a, h, y) - eval_loss(b, h, y)) <= 1e-12

    def test_power_closed_form(self):
        spec = make_spec("comp-sum", "comp-sum-power", 3, 0.5)
        h = np.array([0.2, -0.7, 1.1])
        p = np.exp(h) / np.exp(h).sum()
        expected = (p[2] ** -0.5 - 1) / 0.5
        np.testing.assert_allclose(eval_loss(spec, h, 2), expected, rtol=1e-13)

    def test_sum_exp_ratio(self):
        spec = make_spec("comp-sum", "sum-exp-ratio", 3)
        h = np.array([0.5, 0.0, -1.0])
        expected = np.exp(h[1] - h[0]) + np.exp(h[2] - h[0])
        np.testing.assert_allclose(eval_loss(spec, h, 0), expected, rtol=1e-14)

    def test_margin_label_sign(self):
        spec = make_spec("margin", "logistic")
        np.testing.assert_allclose(eval_loss(spec, 0.8, -1), np.logaddexp(0, 0.8), rtol=1e-15)
        np.testing.assert_allclose(eval_loss(spec, 0.8, +1), np.logaddexp(0, -0.8), rtol=1e-15)

    def test_zero_sum_violation(self):
        spec = make_spec("constrained", "constrained-hinge", 3)
        with pytest.raises(ConstraintError):
            eval_loss(spec, [1.0, 0.0, 0.0], 0)

    def test_extreme_scores_stay_finite(self):
        spec = make_spec("comp-sum", "neg-log", 2)
        # exp(-800) underflows, the log-softmax route does not
        assert eval_loss(spec, [800.0, 0.0], 1) == pytest.approx(800.0)

    def test_zero_softmax_output_domain_error(self):
        spec = make_spec("comp-sum", "neg-log", 2)
        with pytest.raises(DomainError):
            eval_loss(spec, [np.inf, 0.0], 1)

    def test_power_outside_domain(self):
        phi = get_phi("comp-sum-power", 0.5)
        assert np.isinf(phi(np.array([0.0, -0.5]))).all()

    def test_bad_label(self):
        with pytest.raises(ParameterError):
            eval_loss(make_spec("margin", "hinge"), 0.3, 0)
        with pytest.raises(ParameterError):
            eval_loss(make_spec("comp-sum", "neg-log", 3), [0, 0, 0], 3)


class TestLossMatrix:
    def test_shapes(self):
        m = loss_matrix(make_spec("margin", "hinge"), np.zeros((4, 5)))
        assert m.shape == (4, 5, 2)
        c = loss_matrix(make_spec("comp-sum", "neg-log", 3), np.zeros((4, 5, 3)))
        assert c.shape == (4, 5, 3)

    def test_matches_eval_loss(self):
        rng = np.random.default_rng(1)
        spec = make_spec("constrained", "constrained-square", 4)
        h = rng.normal(size=(6, 4))
        h -= h.mean(axis=1, keepdims=True)
        L = loss_matrix(spec, h)
        for i in range(6):
            for y in range(4):
                assert L[i, y] == pytest.approx(eval_loss(spec, h[i], y), rel=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-30, 30), min_size=3, max_size=3))
    def test_neg_log_nonnegative_and_normalized(self, h):
        spec = make_spec("comp-sum", "neg-log", 3)
        L = loss_matrix(spec, np.array(h))
        assert np.all(L >= 0)
        np.testing.assert_allclose(np.exp(-L).sum(), 1.0, rtol=1e-12)


class TestPredict:
    def test_margin_sign(self):
        spec = make_spec("margin", "hinge")
        np.testing.assert_array_equal(predict(spec, np.array([0.5, 0.0, -0.2])), [0, 0, 1])

    def test_ties_to_highest_index(self):
        spec = make_spec("comp-sum", "neg-log", 3)
        assert predict(spec, np.array([1.0, 1.0, 0.0])) == 1


class TestDerivatives:
    @pytest.mark.parametrize("family,pid,tau", ALL_ENTRIES)
    def test_first_derivative_matches_difference(self, family, pid, tau):
        phi = get_phi(pid, tau)
        lo, hi = (0.05, 0.95) if family == "comp-sum" else (-2.5, 2.5)
        u = np.linspace(lo, hi, 97)
        u = u[np.all(np.abs(u[:, None] - np.array(phi.kinks or [np.inf])) > 1e-3, axis=1)]
        h = 1e-6
        fd = (phi(u + h) - phi(u - h)) / (2 * h)
        np.testing.assert_allclose(phi.d1(u), fd, rtol=1e-6, atol=1e-7)

    @pytest.mark.parametrize("family,pid,tau", ALL_ENTRIES)
    def test_second_derivative_matches_difference(self, family, pid, tau):
        phi = get_phi(pid, tau)
        lo, hi = (0.05, 0.95) if family == "comp-sum" else (-2.5, 2.5)
        u = np.linspace(lo, hi, 97)
        u = u[np.all(np.abs(u[:, None] - np.array(phi.kinks or [np.inf])) > 1e-3, axis=1)]
        h = 1e-5
        fd = (phi.d1(u + h) - phi.d1(u - h)) / (2 * h)
        np.testing.assert_allclose(phi.d2(u), fd, rtol=1e-5, atol=1e-6)

    @pytest.mark.parametrize("family,pid,tau", ALL_ENTRIES)
    def test_increment_small_steps(self, family, pid, tau):
        # Phi(x + d) - Phi(x) against its second-order Taylor polynomial
        phi = get_phi(pid, tau)
        x = np.array([0.2, 0.35, 0.5]) if family == "comp-sum" else np.array([-0.3, 0.0, 0.7])
        d = np.array([1e-9, -3e-8, 2e-7])
        taylor = phi.d1(x) * d + 0.5 * phi.d2(x) * d * d
        np.testing.assert_allclose(phi.increment(x, d), taylor, rtol=1e-8, atol=1e-300)

    @pytest.mark.parametrize("family,pid,tau", ALL_ENTRIES)
    def test_increment_large_steps(self, family, pid, tau):
        phi = get_phi(pid, tau)
        x = np.array([0.2, 0.3]) if family == "comp-sum" else np.array([-2.0, 1.0])
        d = np.array([0.6, -0.1]) if family == "comp-sum" else np.array([3.0, -2.5])
        np.testing.assert_allclose(phi.increment(x, d), phi(x + d) - phi(x), rtol=1e-12)

    def test_from_log_matches_value(self):
        for pid, tau in (("neg-log", None), ("sum-exp-ratio", None), ("comp-sum-power", 0.5),
                         ("comp-sum-power", 1.5), ("mae-linear", None)):
            phi = get_phi(pid, tau)
            s = np.linspace(-5, 0, 21)
            np.testing.assert_allclose(phi.from_log(s), phi(np.exp(s)), rtol=1e-12, atol=1e-15)


class TestRegularity:
    @pytest.mark.parametrize("family,pid,tau", ALL_ENTRIES)
    def test_flags_consistent(self, family, pid, tau):
        rep = verify_regularity(get_phi(pid, tau), family)
        assert rep.consistent_with_flag, rep.failing()

    def test_exponential_smooth(self):
        assert verify_regularity(get_phi("exponential"), "margin").smooth_hypotheses_hold

    def test_hinge_fails_curvature(self):
        rep = verify_regularity(get_phi("hinge"), "margin")
        assert not rep.smooth_hypotheses_hold
        assert rep.failing()

    def test_neg_log_signs(self):
        rep = verify_regularity(get_phi("neg-log"), "comp-sum")
        assert rep.smooth_hypotheses_hold
        u = np.linspace(0.01, 0.5, 50)
        phi = get_phi("neg-log")
        assert np.all(phi.d1(u) < 0) and np.all(phi.d2(u) > 0)


class TestSpecs:
    def test_catalog_ids(self):
        assert "comp-sum-power" in PHI_IDS and "constrained-hinge" in PHI_IDS

    def test_unknown_phi(self):
        with pytest.raises(NotFoundError):
            get_phi("cubic")

    def test_power_needs_tau(self):
        with pytest.raises(ParameterError):
            make_spec("comp-sum", "comp-sum-power", 3)

    def test_family_mismatch(self):
        with pytest.raises((ParameterError, NotFoundError)):
            make_spec("margin", "neg-log")

    def test_margin_needs_two_classes(self):
        with pytest.raises(ParameterError):
            make_spec("margin", "hinge", 3)

    def test_constant_c(self):
        assert make_spec("constrained", "constrained-exp", 5).constant_c == pytest.approx(1.75)

    def test_gce_maps_alpha(self):
        spec = gce_spec(5, 0.5)
        assert spec.tau_exponent == pytest.approx(1.5)

    def test_round_trip(self):
        spec = make_spec("comp-sum", "comp-sum-power", 10, 1.5)
        again = spec_from_dict(spec.to_dict())
        assert again.to_dict() == spec.to_dict()
        assert spec.spec_id == "comp-sum/comp-sum-power(tau=1.5)/n=10"

    def test_unknown_key_rejected(self):
        with pytest.raises(SchemaError):
            spec_from_dict({"family": "margin", "phi_id": "hinge", "colour": 1})

    def test_missing_field(self):
        with pytest.raises(SchemaError, match="phi_id"):
            spec_from_dict({"family": "margin"})

    def test_domain_error_kind(self):
        assert DomainError("x").kind == "domain-error"
