"""Constant-velocity Kalman filter over box state (cx, cy, aspect, height).

The 8-dimensional state carries the four box coordinates and their
per-frame velocities.  Process and measurement noise follow the common
tracking-by-detection convention of scaling position standard deviations
with the current box height, so large boxes tolerate larger jumps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .boxes import BoundingBox
from .errors import MalformedInputError, NumericalDegeneracyError

STATE_DIM = 8
MEAS_DIM = 4


@dataclass(frozen=True)
class KalmanParams:
    """Noise scales; position/velocity stds are multiples of box height."""

    process_pos_weight: float = 1.0 / 20
    process_vel_weight: float = 1.0 / 160
    process_aspect_std: float = 1e-2
    process_aspect_vel_std: float = 1e-5
    meas_pos_weight: float = 1.0 / 20
    meas_aspect_std: float = 1e-1
    init_pos_factor: float = 2.0
    init_vel_factor: float = 10.0


@dataclass(frozen=True)
class KalmanState:
    """Gaussian belief: 8-vector mean and 8x8 covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.covariance, dtype=np.float64)
        if mean.shape != (STATE_DIM,) or cov.shape != (STATE_DIM, STATE_DIM):
            raise MalformedInputError(
                f"state must be ({STATE_DIM},) mean with ({STATE_DIM},{STATE_DIM}) covariance"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise NumericalDegeneracyError("non-finite Kalman state")
        if mean[2] <= 0 or mean[3] <= 0:
            raise MalformedInputError(
                f"aspect and height must be positive, got a={mean[2]}, h={mean[3]}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", 0.5 * (cov + cov.T))

    def box(self) -> BoundingBox:
        cx, cy, a, h = self.mean[:MEAS_DIM]
        return BoundingBox.from_cah(cx, cy, a, h)


def _transition_matrix(dt: float) -> np.ndarray:
    F = np.eye(STATE_DIM)
    for i in range(MEAS_DIM):
        F[i, MEAS_DIM + i] = dt
    return F


_H = np.hstack([np.eye(MEAS_DIM), np.zeros((MEAS_DIM, MEAS_DIM))])


def initiate(measurement: BoundingBox, params: KalmanParams = KalmanParams()) -> KalmanState:
    """Start a new track belief centered on an unmatched detection."""
    cx, cy, a, h = measurement.to_cah()
    mean = np.array([cx, cy, a, h, 0.0, 0.0, 0.0, 0.0])
    p = params
    std = np.array(
        [
            p.init_pos_factor * p.meas_pos_weight * h,
            p.init_pos_factor * p.meas_pos_weight * h,
            p.process_aspect_std,
            p.init_pos_factor * p.meas_pos_weight * h,
            p.init_vel_factor * p.process_vel_weight * h,
            p.init_vel_factor * p.process_vel_weight * h,
            p.process_aspect_vel_std,
            p.init_vel_factor * p.process_vel_weight * h,
        ]
    )
    return KalmanState(mean=mean, covariance=np.diag(np.square(std)))


def kalman_predict(
    state: KalmanState, params: KalmanParams = KalmanParams(), dt: float = 1.0
) -> KalmanState:
    """Advance the belief one time step under the constant-velocity model."""
    h = state.mean[3]
    p = params
    std = np.array(
        [
            p.process_pos_weight * h,
            p.process_pos_weight * h,
            p.process_aspect_std,
            p.process_pos_weight * h,
            p.process_vel_weight * h,
            p.process_vel_weight * h,
            p.process_aspect_vel_std,
            p.process_vel_weight * h,
        ]
    )
    Q = np.diag(np.square(std))
    F = _transition_matrix(dt)
    mean = F @ state.mean
    cov = F @ state.covariance @ F.T + Q
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise NumericalDegeneracyError("prediction produced non-finite state")
    return KalmanState(mean=mean, covariance=cov)


def kalman_update(
    state: KalmanState, measurement: BoundingBox, params: KalmanParams = KalmanParams()
) -> KalmanState:
    """Condition the belief on a measured box via the standard linear update."""
    h = state.mean[3]
    p = params
    std = np.array(
        [
            p.meas_pos_weight * h,
            p.meas_pos_weight * h,
            p.meas_aspect_std,
            p.meas_pos_weight * h,
        ]
    )
    R = np.diag(np.square(std))
    z = np.array(measurement.to_cah())

    S = _H @ state.covariance @ _H.T + R
    try:
        chol, lower = scipy.linalg.cho_factor(S, check_finite=False)
        # gain = P H^T S^-1, solved as S gain^T = H P
        gain = scipy.linalg.cho_solve(
            (chol, lower), _H @ state.covariance, check_finite=False
        ).T
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise NumericalDegeneracyError(f"singular innovation covariance: {exc}") from exc

    innovation = z - _H @ state.mean
    mean = state.mean + gain @ innovation
    cov = state.covariance - gain @ S @ gain.T
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise NumericalDegeneracyError("update produced non-finite state")
    return KalmanState(mean=mean, covariance=cov)
