"""Closed-form calibration pipeline and an iterative reference solver.

Biases come from the stationary stage (the still sensor must read zero
rate, so the negated sample means are the biases). Scale factors come
from a linear least-squares fit: after substituting the bias estimate,
the squared reference angle of each rotation is linear in the squared
scale factors, with the squared bias-corrected integrated angles as
regressors. A Gauss-Newton solver over the same observations provides an
independent cross-check of the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    AXES,
    CalibrationError,
    CalibrationParams,
    ProtocolViolation,
    RotationObservation,
    Session,
    StaticObservation,
)

__all__ = [
    "IllConditionedSystem",
    "InconsistentScaleData",
    "ConvergenceFailure",
    "LinearSystem",
    "estimate_bias",
    "build_linear_system",
    "solve_scale",
    "calibrate",
    "calibrate_nonlinear",
]

#: Condition numbers above this signal a degenerate protocol run
#: (for example two rotations about the same axis).
CONDITION_LIMIT = 1e8

#: A rotation stage whose bias-corrected integrated motion stays below
#: this many degrees is treated as static.
MOTION_THRESHOLD_DEG = 10.0

#: The static stage is rejected when a per-axis sample standard deviation
#: exceeds this multiple of the configured noise level.
STILLNESS_STD_FACTOR = 5.0


class IllConditionedSystem(CalibrationError):
    """The rotation stages do not span the parameter space well enough."""


class InconsistentScaleData(CalibrationError):
    """The fit produced a non-positive squared scale factor."""


class ConvergenceFailure(CalibrationError):
    """The iterative solver did not reach its tolerances."""


def estimate_bias(static_stage: StaticObservation) -> np.ndarray:
    """Bias estimate from the stationary stage: negated per-axis means (deg/s)."""
    return -static_stage.means


@dataclass(frozen=True)
class LinearSystem:
    """Regression view of the rotation stages.

    One row per rotation. Columns are the squared bias-corrected
    integrated angles per axis (deg^2); responses are the squared
    reference angles (deg^2).
    """

    regressors: np.ndarray
    responses: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.regressors, dtype=float)
        y = np.asarray(self.responses, dtype=float)
        if x.ndim != 2 or x.shape[1] != 3 or y.shape != (x.shape[0],):
            raise CalibrationError(
                f"expected (n, 3) regressors with matching responses, got {x.shape} and {y.shape}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise CalibrationError("linear system entries must be finite")
        if np.any(x < 0.0):
            raise CalibrationError("regressors are squares and cannot be negative")
        if np.any(y <= 0.0):
            raise CalibrationError("responses are squared reference angles and must be positive")
        object.__setattr__(self, "regressors", x)
        object.__setattr__(self, "responses", y)


def build_linear_system(rotations: Sequence[RotationObservation], biases) -> LinearSystem:
    """Assemble the scale-factor regression from >= 3 rotation stages."""
    if len(rotations) < 3:
        raise ProtocolViolation(
            f"need at least 3 rotation observations to identify 3 scale factors, got {len(rotations)}"
        )
    b = np.asarray(biases, dtype=float)
    x = np.empty((len(rotations), 3))
    y = np.empty(len(rotations))
    for i, rot in enumerate(rotations):
        s = rot.corrected_sums(b)
        x[i] = s * s
        y[i] = rot.theta_total ** 2
    return LinearSystem(x, y)


def solve_scale(system: LinearSystem, *, condition_limit: float = CONDITION_LIMIT) -> np.ndarray:
    """Least-squares scale factors from the rotation regression.

    Raises IllConditionedSystem for degenerate regressors and
    InconsistentScaleData when a fitted squared scale is not positive;
    negative values are reported, never clamped.
    """
    x = system.regressors
    cond = np.linalg.cond(x)
    if not np.isfinite(cond) or cond > condition_limit:
        raise IllConditionedSystem(
            f"regressor matrix condition number {cond:.3g} exceeds {condition_limit:.3g}; "
            "the rotation stages look degenerate (for example repeated axes)"
        )
    scale_sq, *_ = np.linalg.lstsq(x, system.responses, rcond=None)
    if np.any(scale_sq <= 0.0):
        bad = ", ".join(
            f"{AXES[i]}={scale_sq[i]:.6g}" for i in range(3) if scale_sq[i] <= 0.0
        )
        raise InconsistentScaleData(
            f"non-positive squared scale factor ({bad}); "
            "the data contradicts the positive-scale model"
        )
    return np.sqrt(scale_sq)


def calibrate(
    session: Session,
    *,
    noise_sigma: float | None = None,
    motion_threshold: float = MOTION_THRESHOLD_DEG,
    condition_limit: float = CONDITION_LIMIT,
) -> CalibrationParams:
    """Closed-form calibration of one session.

    ``noise_sigma`` (deg/s) enables the stillness guard: the static stage
    is rejected when any per-axis sample standard deviation exceeds
    ``STILLNESS_STD_FACTOR`` times this value, so motion cannot leak into
    the bias estimate. ``motion_threshold`` (degrees) rejects sessions in
    which every rotation stage integrates to almost no motion.
    """
    static = session.static_stage
    stds = static.stds
    if noise_sigma is not None and stds is not None:
        limit = STILLNESS_STD_FACTOR * noise_sigma
        if np.any(stds > limit):
            worst = AXES[int(np.argmax(stds))]
            raise ProtocolViolation(
                f"static stage shows motion: axis {worst} sample standard deviation "
                f"{stds.max():.4g} deg/s exceeds {limit:.4g} deg/s"
            )
    biases = estimate_bias(static)
    motion = [float(np.linalg.norm(rot.corrected_sums(biases))) for rot in session.rotations]
    if all(m < motion_threshold for m in motion):
        raise ProtocolViolation(
            f"every rotation stage integrates below {motion_threshold:g} degrees; "
            "the session contains no usable rotation"
        )
    scales = solve_scale(
        build_linear_system(session.rotations, biases),
        condition_limit=condition_limit,
    )
    return CalibrationParams.from_arrays(scales, biases)


def _residuals_and_jacobian(
    scales: np.ndarray,
    biases: np.ndarray,
    sums: np.ndarray,
    durations: np.ndarray,
    theta_sq: np.ndarray,
    static_means: np.ndarray,
    static_duration: float,
    fit_biases: bool,
) -> tuple[np.ndarray, np.ndarray]:
    # Rotation residual i: sum_l (k_l S_{l,i})^2 - theta_i^2 with
    # S_{l,i} = sum_{l,i} + duration_i * b_l.
    s = sums + durations[:, None] * biases
    r_rot = (s * s) @ (scales ** 2) - theta_sq
    dr_dk = 2.0 * scales * (s * s)
    dr_db = 2.0 * (scales ** 2) * s * durations[:, None]
    if not fit_biases:
        return r_rot, dr_dk
    # Static residual per axis: the integrated angle a still sensor must
    # show as zero, k_l * duration * (mean_l + b_l). Linear in b, so the
    # joint system stays well posed at the optimum.
    resid_static = scales * static_duration * (static_means + biases)
    j_static = np.zeros((3, 6))
    j_static[:, :3] = np.diag(static_duration * (static_means + biases))
    j_static[:, 3:] = np.diag(scales * static_duration)
    residuals = np.concatenate([r_rot, resid_static])
    jacobian = np.vstack([np.hstack([dr_dk, dr_db]), j_static])
    return residuals, jacobian


def calibrate_nonlinear(
    rotations: Sequence[RotationObservation],
    static_stage: StaticObservation,
    init: CalibrationParams,
    *,
    fit_biases: bool = True,
    max_iterations: int = 200,
    residual_tolerance: float = 1e-10,
    step_tolerance: float = 1e-12,
) -> CalibrationParams:
    """Gauss-Newton reference solution over the same observations.

    Minimizes the sum of squared rotation residuals. With
    ``fit_biases=True`` (default) the stationary stage contributes one
    residual per axis and all six parameters are free; with
    ``fit_biases=False`` the biases are fixed to the closed-form static
    estimate and only the scales are optimized. Steps are halved whenever
    the residual would increase or a scale factor would leave the
    positive domain. Convergence requires the relative residual
    improvement or the step size to fall below the tolerances.
    """
    if len(rotations) < 3:
        raise ProtocolViolation(
            f"need at least 3 rotation observations, got {len(rotations)}"
        )
    sums = np.stack([rot.sums for rot in rotations])
    durations = np.array([rot.duration for rot in rotations])
    theta_sq = np.array([rot.theta_total ** 2 for rot in rotations])
    static_means = static_stage.means
    static_duration = static_stage.duration

    scales = init.scales.copy()
    biases = init.biases.copy() if fit_biases else estimate_bias(static_stage)
    n_free = 6 if fit_biases else 3

    def unpack(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if fit_biases:
            return x[:3], x[3:]
        return x, biases

    def objective(x: np.ndarray) -> float:
        k, b = unpack(x)
        r, _ = _residuals_and_jacobian(
            k, b, sums, durations, theta_sq, static_means, static_duration, fit_biases
        )
        return float(r @ r)

    x = np.concatenate([scales, biases]) if fit_biases else scales
    current = objective(x)
    if current < 1e-18:
        k, b = unpack(x)
        return CalibrationParams.from_arrays(k, b)

    for _ in range(max_iterations):
        k, b = unpack(x)
        r, jac = _residuals_and_jacobian(
            k, b, sums, durations, theta_sq, static_means, static_duration, fit_biases
        )
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        alpha = 1.0
        candidate = None
        candidate_cost = None
        for _halving in range(60):
            trial = x + alpha * step
            if np.min(trial[:3]) <= 0.0:
                alpha *= 0.5
                continue
            trial_cost = objective(trial)
            if trial_cost <= current:
                candidate = trial
                candidate_cost = trial_cost
                break
            alpha *= 0.5
        if candidate is None:
            raise ConvergenceFailure(
                f"no descending step found (residual {current:.6g}); "
                "the solver cannot improve within the positive-scale domain"
            )
        improvement = current - candidate_cost
        step_size = float(np.max(np.abs(alpha * step[:n_free])))
        x = candidate
        previous, current = current, candidate_cost
        if (
            current < 1e-18
            or improvement <= residual_tolerance * max(previous, 1e-30)
            or step_size < step_tolerance
        ):
            k, b = unpack(x)
            return CalibrationParams.from_arrays(k, b)
    raise ConvergenceFailure(
        f"no convergence within {max_iterations} iterations; final residual {current:.6g}"
    )
