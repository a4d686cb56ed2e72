import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gyrocal.model import CalibrationError, CalibrationParams, RotationObservation
from gyrocal.observability import (
    SensitivityReport,
    finite_difference_grad,
    grad_bias,
    grad_scale,
    model_term_grad_bias,
    model_term_grad_scale,
    sensitivity,
)


def rotation(sums, theta=360.0, duration=5.0, n=500):
    return RotationObservation(sums[0], sums[1], sums[2], theta_total=theta,
                               n_samples=n, duration=duration)


def still_observation(theta=360.0):
    """Zero integrated motion on every axis."""
    return rotation([0.0, 0.0, 0.0], theta=theta, n=300, duration=3.0)


def consistent_turn(axis, magnitude):
    """A turn whose reference angle equals its integrated magnitude."""
    sums = [0.0, 0.0, 0.0]
    sums[axis] = magnitude
    return rotation(sums, theta=magnitude)


def random_setup(rng):
    nominal = CalibrationParams.from_arrays(
        rng.uniform(0.8, 1.2, 3), rng.uniform(-5.0, 5.0, 3))
    rotations = [
        rotation(rng.uniform(-400.0, 400.0, 3), theta=rng.uniform(300.0, 400.0))
        for _ in range(3)
    ]
    return nominal, rotations


class TestFiniteDifferenceAgreement:
    def test_random_configurations(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            nominal, rotations = random_setup(rng)
            analytic = np.concatenate([
                grad_scale(nominal, rotations),
                grad_bias(nominal, rotations),
            ])
            numeric = finite_difference_grad(nominal, rotations, step=1e-5)
            denom = max(1.0, float(np.max(np.abs(analytic))))
            assert np.max(np.abs(analytic - numeric)) / denom < 1e-6

    def test_halving_step_shrinks_mismatch(self):
        rng = np.random.default_rng(3)
        nominal, rotations = random_setup(rng)
        analytic = np.concatenate([
            grad_scale(nominal, rotations),
            grad_bias(nominal, rotations),
        ])
        err_coarse = np.max(np.abs(
            finite_difference_grad(nominal, rotations, step=2e-3) - analytic))
        err_fine = np.max(np.abs(
            finite_difference_grad(nominal, rotations, step=1e-3) - analytic))
        # central differences converge at second order: 4x per halving
        assert err_fine < err_coarse / 3.0

    def test_zero_at_consistent_optimum(self):
        nominal = CalibrationParams.identity()
        rotations = [consistent_turn(axis, 360.0) for axis in range(3)]
        at_optimum = finite_difference_grad(nominal, rotations)
        nearby = finite_difference_grad(
            CalibrationParams(1.01, 1.0, 1.0, 0.0, 0.0, 0.0), rotations)
        # the optimum value sits on the O(h^2) truncation floor, which is
        # negligible next to the gradient a percent away
        assert np.max(np.abs(at_optimum)) < 1e-6 * np.max(np.abs(nearby))
        np.testing.assert_allclose(grad_scale(nominal, rotations), np.zeros(3))
        np.testing.assert_allclose(grad_bias(nominal, rotations), np.zeros(3))

    def test_step_must_be_positive(self):
        with pytest.raises(CalibrationError):
            finite_difference_grad(CalibrationParams.identity(),
                                   [still_observation()], step=0.0)


class TestStaticClaims:
    def test_resting_zero_bias_hides_scale(self):
        nominal = CalibrationParams(1.1, 0.9, 1.0, 0.0, 0.0, 0.0)
        still = [still_observation()]
        assert np.all(grad_scale(nominal, still) == 0.0)
        assert np.all(model_term_grad_scale(nominal, still) == 0.0)

    def test_resting_nonzero_bias_keeps_bias_observable(self):
        nominal = CalibrationParams(1.1, 0.9, 1.0, 2.0, -3.0, 0.5)
        still = [still_observation()]
        assert np.all(grad_bias(nominal, still) != 0.0)
        assert np.all(model_term_grad_bias(nominal, still) != 0.0)


class TestModelTermForms:
    def test_scale_form_known_value(self):
        # single x turn, unit scales, zero bias: 2 * 360^2 on x
        nominal = CalibrationParams.identity()
        value = model_term_grad_scale(nominal, [rotation([360.0, 0.0, 0.0])])
        np.testing.assert_allclose(value, [2.0 * 360.0 ** 2, 0.0, 0.0])

    def test_bias_form_known_value(self):
        # 2 k^2 d S with d=5, S=360: 3600 on x
        nominal = CalibrationParams.identity()
        value = model_term_grad_bias(nominal, [rotation([360.0, 0.0, 0.0])])
        np.testing.assert_allclose(value, [3600.0, 0.0, 0.0])

    @given(st.floats(min_value=10.0, max_value=300.0),
           st.floats(min_value=1.0, max_value=2.0))
    @settings(max_examples=40)
    def test_scale_sensitivity_grows_with_turn_magnitude(self, magnitude, factor):
        nominal = CalibrationParams(1.05, 1.0, 1.0, 0.0, 0.0, 0.0)
        small = model_term_grad_scale(nominal, [consistent_turn(0, magnitude)])
        large = model_term_grad_scale(nominal, [consistent_turn(0, magnitude * factor)])
        assert abs(large[0]) >= abs(small[0])

    @given(st.floats(min_value=10.0, max_value=300.0),
           st.floats(min_value=1.0, max_value=2.0))
    @settings(max_examples=40)
    def test_smooth_gradient_grows_for_off_truth_nominal(self, magnitude, factor):
        # consistent observations, scale off by 5 percent: |dJ/dk| = 4k|k^2-1|S^4
        nominal = CalibrationParams(1.05, 1.0, 1.0, 0.0, 0.0, 0.0)
        small = grad_scale(nominal, [consistent_turn(0, magnitude)])
        large = grad_scale(nominal, [consistent_turn(0, magnitude * factor)])
        assert abs(large[0]) >= abs(small[0])

    def test_doubling_turn_angle_raises_scale_sensitivity(self):
        nominal = CalibrationParams(1.05, 1.0, 1.0, 0.0, 0.0, 0.0)
        single = grad_scale(nominal, [consistent_turn(0, 360.0)])
        double = grad_scale(nominal, [consistent_turn(0, 720.0)])
        assert abs(double[0]) > abs(single[0])
        single_m = model_term_grad_scale(nominal, [consistent_turn(0, 360.0)])
        double_m = model_term_grad_scale(nominal, [consistent_turn(0, 720.0)])
        assert abs(double_m[0]) > abs(single_m[0])


class TestSensitivityReport:
    def test_bundles_both_gradients(self):
        rng = np.random.default_rng(5)
        nominal, rotations = random_setup(rng)
        report = sensitivity(nominal, rotations)
        np.testing.assert_allclose(report.dJ_dk, grad_scale(nominal, rotations))
        np.testing.assert_allclose(report.dJ_db, grad_bias(nominal, rotations))
        assert report.nominal == nominal

    def test_rejects_nonfinite_entries(self):
        with pytest.raises(CalibrationError):
            SensitivityReport(dJ_dk=(float("nan"), 0.0, 0.0),
                              dJ_db=(0.0, 0.0, 0.0),
                              nominal=CalibrationParams.identity())

    def test_empty_rotation_list_rejected(self):
        with pytest.raises(CalibrationError):
            sensitivity(CalibrationParams.identity(), [])
