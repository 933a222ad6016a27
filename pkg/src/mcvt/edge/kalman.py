"""Constant-velocity Kalman filter over box states.

State is 8-dimensional: (cx, cy, aspect, height) plus their per-frame
velocities. Process and measurement noise scale with the box height, so
the same weights work across box sizes.
"""

from __future__ import annotations

import numpy as np

from ..core import BBox


class FilterNumericsError(RuntimeError):
    """The covariance stopped being positive definite."""


def bbox_to_state(b: BBox) -> np.ndarray:
    if b.h <= 0:
        raise ValueError("box height must be positive to form a filter state")
    return np.array([b.cx, b.cy, b.w / b.h, b.h], dtype=np.float64)


def state_to_bbox(z: np.ndarray) -> BBox:
    cx, cy, aspect, h = (float(v) for v in z[:4])
    w = aspect * h
    return BBox(cx - w / 2.0, cy - h / 2.0, w, h)


class BoxKalman:
    """Shared filter math; per-track state lives with the caller."""

    def __init__(self, pos_weight: float = 1.0 / 20, vel_weight: float = 1.0 / 160):
        self.pos_weight = pos_weight
        self.vel_weight = vel_weight
        self._motion = np.eye(8)
        for i in range(4):
            self._motion[i, 4 + i] = 1.0
        self._project = np.eye(4, 8)

    def initiate(self, measurement: BBox) -> tuple[np.ndarray, np.ndarray]:
        z = bbox_to_state(measurement)
        mean = np.zeros(8)
        mean[:4] = z
        h = z[3]
        std = np.array([
            2 * self.pos_weight * h, 2 * self.pos_weight * h, 1e-2, 2 * self.pos_weight * h,
            10 * self.vel_weight * h, 10 * self.vel_weight * h, 1e-5, 10 * self.vel_weight * h,
        ])
        return mean, np.diag(std * std)

    def predict(self, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = mean[3]
        std = np.array([
            self.pos_weight * h, self.pos_weight * h, 1e-2, self.pos_weight * h,
            self.vel_weight * h, self.vel_weight * h, 1e-5, self.vel_weight * h,
        ])
        process_noise = np.diag(std * std)
        mean = self._motion @ mean
        cov = self._motion @ cov @ self._motion.T + process_noise
        return mean, cov

    def update(
        self,
        mean: np.ndarray,
        cov: np.ndarray,
        measurement: BBox,
        meas_scale: float = 1.0,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Fold one measured box in; ``meas_scale`` scales measurement noise."""
        z = bbox_to_state(measurement)
        h = mean[3]
        std = np.array([
            self.pos_weight * h, self.pos_weight * h, 1e-1, self.pos_weight * h,
        ])
        meas_noise = np.diag(std * std) * meas_scale
        projected_cov = self._project @ cov @ self._project.T + meas_noise
        gain = np.linalg.solve(projected_cov.T, (cov @ self._project.T).T).T
        innovation = z - self._project @ mean
        new_mean = mean + gain @ innovation
        new_cov = cov - gain @ projected_cov @ gain.T
        new_cov = (new_cov + new_cov.T) / 2.0
        try:
            np.linalg.cholesky(new_cov + 1e-12 * np.eye(8))
        except np.linalg.LinAlgError as exc:
            raise FilterNumericsError("covariance lost positive definiteness") from exc
        return new_mean, new_cov
