"""Frame-activity gate.

Keeps a per-cell running Gaussian background model over a low-resolution
intensity raster. A frame is "active" when the number of cells disagreeing
with the background exceeds the configured threshold; inactive frames let
the caller skip the rest of the per-frame work.

The first raster only initializes the model (no cell can be foreground
before there is a background to disagree with). A missing raster cannot be
gated at all, so it passes through as active.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..config import MotionGateConfig


class MotionGate:
    def __init__(self, cfg: MotionGateConfig):
        self.cfg = cfg
        self._mean: Optional[np.ndarray] = None
        self._var: Optional[np.ndarray] = None

    @property
    def shape(self) -> Optional[tuple[int, int]]:
        return None if self._mean is None else self._mean.shape

    def update(self, frame: Optional[np.ndarray]) -> tuple[int, bool]:
        """Classify ``frame`` against the background, then fold it in.

        Returns ``(foreground_count, active)``. ``frame=None`` bypasses the
        gate: nothing to classify, nothing learned, frame treated as active.
        """
        if frame is None:
            return 0, True
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim != 2:
            raise ValueError("gate rasters must be 2-D")
        if self._mean is None:
            self._mean = frame.copy()
            self._var = np.full(frame.shape, self.cfg.variance_floor, dtype=np.float64)
            count = 0
        else:
            if frame.shape != self._mean.shape:
                raise ValueError(
                    f"raster shape changed: model is {self._mean.shape}, frame is {frame.shape}"
                )
            diff = frame - self._mean
            foreground = np.abs(diff) > self.cfg.sigma_mult * np.sqrt(self._var)
            count = int(foreground.sum())
            lr = self.cfg.learning_rate
            self._mean += lr * diff
            self._var = (1.0 - lr) * self._var + lr * diff * diff
            np.maximum(self._var, self.cfg.variance_floor, out=self._var)
        return count, count > self.cfg.pixel_threshold
