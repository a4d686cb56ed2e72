"""Six-parameter gyroscope error model and measurement containers.

Units are fixed across the package: angular rates in deg/s, integrated
angles in degrees, durations in seconds. Scale factors are dimensionless
and positive; biases are additive offsets on the measured rate. The
corrected rate on each axis is ``scale * (measured + bias)``.

Rotation stages are summarized by time-scaled sums of the measured rates
(each sample weighted by the sample period), so a full turn integrates to
360 regardless of the sampling frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "CalibrationError",
    "ProtocolViolation",
    "CalibrationParams",
    "StaticObservation",
    "RotationObservation",
    "Session",
    "apply_calibration",
    "inverse_calibration",
    "rotation_residuals",
    "cost",
    "squared_cost",
]

AXES = ("x", "y", "z")


class CalibrationError(ValueError):
    """Raised when inputs or data violate the calibration model contract."""


class ProtocolViolation(CalibrationError):
    """Raised when observations do not follow the measurement protocol."""


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise CalibrationError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class CalibrationParams:
    """Per-axis scale factors (dimensionless, positive) and biases (deg/s)."""

    k_x: float
    k_y: float
    k_z: float
    b_x: float
    b_y: float
    b_z: float

    def __post_init__(self) -> None:
        _require_finite(
            "calibration parameter",
            self.k_x, self.k_y, self.k_z, self.b_x, self.b_y, self.b_z,
        )
        if min(self.k_x, self.k_y, self.k_z) <= 0.0:
            raise CalibrationError(
                "scale factors must be positive: "
                f"({self.k_x}, {self.k_y}, {self.k_z})"
            )

    @classmethod
    def identity(cls) -> "CalibrationParams":
        return cls(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_arrays(cls, scales: Sequence[float], biases: Sequence[float]) -> "CalibrationParams":
        k = [float(v) for v in scales]
        b = [float(v) for v in biases]
        if len(k) != 3 or len(b) != 3:
            raise CalibrationError("expected three scales and three biases")
        return cls(k[0], k[1], k[2], b[0], b[1], b[2])

    @property
    def scales(self) -> np.ndarray:
        return np.array([self.k_x, self.k_y, self.k_z])

    @property
    def biases(self) -> np.ndarray:
        return np.array([self.b_x, self.b_y, self.b_z])

    def as_dict(self) -> dict[str, float]:
        return {
            "k_x": self.k_x, "k_y": self.k_y, "k_z": self.k_z,
            "b_x": self.b_x, "b_y": self.b_y, "b_z": self.b_z,
        }


def apply_calibration(params: CalibrationParams, raw) -> np.ndarray:
    """Correct measured rates: ``scale * (measured + bias)`` per axis.

    Accepts a single length-3 sample or an (N, 3) batch; returns the same
    shape in deg/s.
    """
    m = np.asarray(raw, dtype=float)
    return params.scales * (m + params.biases)


def inverse_calibration(params: CalibrationParams, true_rate) -> np.ndarray:
    """Map true rates back to the raw measurement the sensor would report."""
    g = np.asarray(true_rate, dtype=float)
    return g / params.scales - params.biases


@dataclass(frozen=True)
class StaticObservation:
    """Summary of the stationary stage: per-axis means of the measured rate.

    ``duration`` is the integration time ``n_samples / sample_rate`` in
    seconds. The optional per-axis sample standard deviations feed the
    stillness guard in the estimator.
    """

    mean_x: float
    mean_y: float
    mean_z: float
    n_samples: int
    duration: float
    std_x: float | None = None
    std_y: float | None = None
    std_z: float | None = None

    def __post_init__(self) -> None:
        _require_finite("static mean", self.mean_x, self.mean_y, self.mean_z)
        if self.n_samples < 2:
            raise ProtocolViolation(
                f"static stage needs at least 2 samples, got {self.n_samples}"
            )
        if not (math.isfinite(self.duration) and self.duration > 0.0):
            raise CalibrationError(f"static duration must be positive, got {self.duration}")
        stds = (self.std_x, self.std_y, self.std_z)
        known = [s for s in stds if s is not None]
        if known and len(known) != 3:
            raise CalibrationError("provide either no or all three standard deviations")
        for s in known:
            if not (math.isfinite(s) and s >= 0.0):
                raise CalibrationError(f"standard deviation must be nonnegative, got {s}")

    @classmethod
    def from_samples(cls, samples, sample_rate: float) -> "StaticObservation":
        """Summarize an (N, 3) array of measured rates taken at rest."""
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise CalibrationError(f"expected an (N, 3) sample array, got shape {arr.shape}")
        if sample_rate <= 0:
            raise CalibrationError(f"sample rate must be positive, got {sample_rate}")
        n = arr.shape[0]
        if n < 2:
            raise ProtocolViolation(f"static stage needs at least 2 samples, got {n}")
        mean = arr.mean(axis=0)
        std = arr.std(axis=0, ddof=1)
        return cls(
            mean[0], mean[1], mean[2],
            n_samples=n,
            duration=n / sample_rate,
            std_x=std[0], std_y=std[1], std_z=std[2],
        )

    @property
    def means(self) -> np.ndarray:
        return np.array([self.mean_x, self.mean_y, self.mean_z])

    @property
    def stds(self) -> np.ndarray | None:
        if self.std_x is None:
            return None
        return np.array([self.std_x, self.std_y, self.std_z])


@dataclass(frozen=True)
class RotationObservation:
    """Summary of one rotation stage.

    ``sum_x/y/z`` are the time-scaled sums of the measured rates over the
    stage, in degrees. ``theta_total`` is the known magnitude of the
    physical rotation used as the reference, in degrees (360 for the
    standard protocol). ``duration`` is ``n_samples / sample_rate``.
    """

    sum_x: float
    sum_y: float
    sum_z: float
    theta_total: float
    n_samples: int
    duration: float

    def __post_init__(self) -> None:
        _require_finite("rotation sum", self.sum_x, self.sum_y, self.sum_z)
        if not (math.isfinite(self.theta_total) and self.theta_total > 0.0):
            raise CalibrationError(
                f"reference rotation magnitude must be positive, got {self.theta_total}"
            )
        if self.n_samples < 2:
            raise ProtocolViolation(
                f"rotation stage needs at least 2 samples, got {self.n_samples}"
            )
        if not (math.isfinite(self.duration) and self.duration > 0.0):
            raise CalibrationError(f"rotation duration must be positive, got {self.duration}")

    @classmethod
    def from_samples(cls, samples, sample_rate: float, theta_total: float = 360.0) -> "RotationObservation":
        """Summarize an (N, 3) array of measured rates over one rotation."""
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise CalibrationError(f"expected an (N, 3) sample array, got shape {arr.shape}")
        if sample_rate <= 0:
            raise CalibrationError(f"sample rate must be positive, got {sample_rate}")
        n = arr.shape[0]
        sums = arr.sum(axis=0) / sample_rate
        return cls(
            sums[0], sums[1], sums[2],
            theta_total=theta_total,
            n_samples=n,
            duration=n / sample_rate,
        )

    @property
    def sums(self) -> np.ndarray:
        return np.array([self.sum_x, self.sum_y, self.sum_z])

    def corrected_sums(self, biases) -> np.ndarray:
        """Bias-corrected integrated angles per axis: ``sum + duration * bias``."""
        return self.sums + self.duration * np.asarray(biases, dtype=float)


@dataclass(frozen=True)
class Session:
    """One complete protocol run: a stationary stage then >= 3 rotations."""

    static_stage: StaticObservation
    rotations: tuple[RotationObservation, ...]
    sample_rate: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotations", tuple(self.rotations))
        if len(self.rotations) < 3:
            raise ProtocolViolation(
                f"a session needs at least 3 rotation stages, got {len(self.rotations)}"
            )
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0.0):
            raise CalibrationError(f"sample rate must be positive, got {self.sample_rate}")


def rotation_residuals(params: CalibrationParams, rotations: Sequence[RotationObservation]) -> np.ndarray:
    """Per-rotation mismatch between the modelled and the reference squared
    rotation magnitude, in deg^2.

    The modelled value is ``sum_l (k_l * S_l)^2`` with S the bias-corrected
    integrated angle on axis l.
    """
    if len(rotations) == 0:
        raise CalibrationError("at least one rotation observation is required")
    k_sq = params.scales ** 2
    out = np.empty(len(rotations))
    for i, rot in enumerate(rotations):
        s = rot.corrected_sums(params.biases)
        out[i] = float(k_sq @ (s * s)) - rot.theta_total ** 2
    return out


def cost(params: CalibrationParams, rotations: Sequence[RotationObservation]) -> float:
    """Accumulated absolute rotation-magnitude mismatch (deg^2).

    Zero exactly when the parameters reproduce every reference angle.
    """
    return float(np.abs(rotation_residuals(params, rotations)).sum())


def squared_cost(params: CalibrationParams, rotations: Sequence[RotationObservation]) -> float:
    """Sum of squared rotation residuals (deg^4).

    The smooth variant of :func:`cost`; this is the objective the iterative
    solver minimizes and the sensitivity analysis differentiates. Both
    variants vanish together at an exact fit.
    """
    r = rotation_residuals(params, rotations)
    return float(r @ r)
