"""Sensitivity of the calibration cost to each parameter.

The magnitude of the cost gradient at a nominal parameter point says how
well the observations constrain that parameter: a zero component means
the data cannot distinguish nearby values. Two gradient flavours live
here. ``grad_scale`` and ``grad_bias`` differentiate the smooth
squared-residual cost and therefore agree with numerical
differentiation. ``model_term_grad_scale`` and ``model_term_grad_bias``
differentiate only the model prediction (the squared integrated angle),
which drops the residual weighting; they are the simpler diagnostic
numbers reported by the command-line tools.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    CalibrationError,
    CalibrationParams,
    RotationObservation,
    squared_cost,
)

__all__ = [
    "SensitivityReport",
    "grad_scale",
    "grad_bias",
    "model_term_grad_scale",
    "model_term_grad_bias",
    "sensitivity",
    "finite_difference_grad",
]


def _stage_arrays(
    nominal: CalibrationParams, rotations: Sequence[RotationObservation]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not rotations:
        raise CalibrationError("sensitivity needs at least one rotation observation")
    s = np.stack([rot.corrected_sums(nominal.biases) for rot in rotations])
    durations = np.array([rot.duration for rot in rotations])
    theta_sq = np.array([rot.theta_total ** 2 for rot in rotations])
    return s, durations, theta_sq


def grad_scale(
    nominal: CalibrationParams, rotations: Sequence[RotationObservation]
) -> np.ndarray:
    """Gradient of the squared-residual cost in the three scale factors."""
    s, _, theta_sq = _stage_arrays(nominal, rotations)
    k = nominal.scales
    residual = (s * s) @ (k ** 2) - theta_sq
    return 4.0 * k * (residual @ (s * s))


def grad_bias(
    nominal: CalibrationParams, rotations: Sequence[RotationObservation]
) -> np.ndarray:
    """Gradient of the squared-residual cost in the three biases."""
    s, durations, theta_sq = _stage_arrays(nominal, rotations)
    k = nominal.scales
    residual = (s * s) @ (k ** 2) - theta_sq
    return 4.0 * k ** 2 * ((residual * durations) @ s)


def model_term_grad_scale(
    nominal: CalibrationParams, rotations: Sequence[RotationObservation]
) -> np.ndarray:
    """Derivative of the predicted squared angle in each scale factor.

    Per axis: 2 k_l sum_i S_{l,i}^2. Grows with the integrated rotation
    magnitude and vanishes exactly when the sensor never moved and the
    nominal bias is zero, so a resting sensor cannot reveal its scale.
    """
    s, _, _ = _stage_arrays(nominal, rotations)
    return 2.0 * nominal.scales * np.sum(s * s, axis=0)


def model_term_grad_bias(
    nominal: CalibrationParams, rotations: Sequence[RotationObservation]
) -> np.ndarray:
    """Derivative of the predicted squared angle in each bias.

    Per axis: 2 k_l^2 sum_i d_i S_{l,i}. Stays nonzero for a resting
    sensor with nonzero nominal bias, so stationary data still constrains
    the bias.
    """
    s, durations, _ = _stage_arrays(nominal, rotations)
    return 2.0 * nominal.scales ** 2 * (durations @ s)


@dataclass(frozen=True)
class SensitivityReport:
    """Per-axis cost gradients at a nominal parameter point."""

    dJ_dk: tuple[float, float, float]
    dJ_db: tuple[float, float, float]
    nominal: CalibrationParams

    def __post_init__(self) -> None:
        values = (*self.dJ_dk, *self.dJ_db)
        if len(self.dJ_dk) != 3 or len(self.dJ_db) != 3:
            raise CalibrationError("sensitivity report needs three components per parameter block")
        if not all(np.isfinite(v) for v in values):
            raise CalibrationError("sensitivity report entries must be finite")


def sensitivity(
    nominal: CalibrationParams, rotations: Sequence[RotationObservation]
) -> SensitivityReport:
    """Bundle both smooth-cost gradients into one report."""
    return SensitivityReport(
        dJ_dk=tuple(float(v) for v in grad_scale(nominal, rotations)),
        dJ_db=tuple(float(v) for v in grad_bias(nominal, rotations)),
        nominal=nominal,
    )


def finite_difference_grad(
    nominal: CalibrationParams,
    rotations: Sequence[RotationObservation],
    step: float = 1e-5,
) -> np.ndarray:
    """Central-difference gradient of the squared-residual cost.

    Returns the six components in the order k_x, k_y, k_z, b_x, b_y,
    b_z. The step must be positive and small enough to keep the
    perturbed scale factors positive.
    """
    if not step > 0.0:
        raise CalibrationError(f"finite-difference step must be positive, got {step}")
    if not rotations:
        raise CalibrationError("sensitivity needs at least one rotation observation")
    base = np.concatenate([nominal.scales, nominal.biases])

    def cost_at(vec: np.ndarray) -> float:
        params = CalibrationParams.from_arrays(vec[:3], vec[3:])
        return squared_cost(params, rotations)

    grad = np.empty(6)
    for j in range(6):
        forward = base.copy()
        backward = base.copy()
        forward[j] += step
        backward[j] -= step
        grad[j] = (cost_at(forward) - cost_at(backward)) / (2.0 * step)
    return grad
