"""Triaxial gyroscope autocalibration without external equipment.

A six-parameter rate-gyro error model (per-axis scale factor and bias),
estimated from one short protocol: hold the sensor still, then turn it
360 degrees about each axis by hand. Biases fall out of the still stage,
scale factors out of a linear regression on the integrated turns.
Everything works in degrees and seconds.
"""

from .model import (
    AXES,
    CalibrationError,
    CalibrationParams,
    ProtocolViolation,
    RotationObservation,
    Session,
    StaticObservation,
    apply_calibration,
    cost,
    inverse_calibration,
    rotation_residuals,
    squared_cost,
)
from .estimator import (
    ConvergenceFailure,
    IllConditionedSystem,
    InconsistentScaleData,
    LinearSystem,
    build_linear_system,
    calibrate,
    calibrate_nonlinear,
    estimate_bias,
    solve_scale,
)
from .observability import (
    SensitivityReport,
    finite_difference_grad,
    grad_bias,
    grad_scale,
    model_term_grad_bias,
    model_term_grad_scale,
    sensitivity,
)
from .doe import (
    Design,
    GOptimalityReport,
    SingularDesignError,
    canonical_design,
    is_g_optimal,
    max_spv_sphere,
    moment_matrix,
    spv,
)
from .simulator import (
    CampaignReport,
    GroundTruth,
    ReplicateResult,
    SimulatedSession,
    SimulationConfig,
    SpeedProfile,
    bezier_profile,
    run_monte_carlo,
    sample_ground_truth,
    simulate_session,
)
from .session_io import (
    LogParseError,
    LogSegment,
    SessionLog,
    read_session_log,
    write_session_log,
)

__version__ = "0.1.0"

__all__ = [
    "AXES",
    "CalibrationError",
    "CalibrationParams",
    "ProtocolViolation",
    "RotationObservation",
    "Session",
    "StaticObservation",
    "apply_calibration",
    "cost",
    "inverse_calibration",
    "rotation_residuals",
    "squared_cost",
    "ConvergenceFailure",
    "IllConditionedSystem",
    "InconsistentScaleData",
    "LinearSystem",
    "build_linear_system",
    "calibrate",
    "calibrate_nonlinear",
    "estimate_bias",
    "solve_scale",
    "SensitivityReport",
    "finite_difference_grad",
    "grad_bias",
    "grad_scale",
    "model_term_grad_bias",
    "model_term_grad_scale",
    "sensitivity",
    "Design",
    "GOptimalityReport",
    "SingularDesignError",
    "canonical_design",
    "is_g_optimal",
    "max_spv_sphere",
    "moment_matrix",
    "spv",
    "CampaignReport",
    "GroundTruth",
    "ReplicateResult",
    "SimulatedSession",
    "SimulationConfig",
    "SpeedProfile",
    "bezier_profile",
    "run_monte_carlo",
    "sample_ground_truth",
    "simulate_session",
    "LogParseError",
    "LogSegment",
    "SessionLog",
    "read_session_log",
    "write_session_log",
    "__version__",
]
