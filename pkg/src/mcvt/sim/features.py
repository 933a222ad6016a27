"""Appearance features without a CNN.

The oracle provider stands in for a re-id backbone: every ground-truth
vehicle owns a fixed unit vector (an orthonormal basis vector while ids
fit in the feature dimension), and a crop's feature is that vector plus
optional per-camera bias and Gaussian noise, renormalized. Detections that
match no ground-truth box (false positives) get a fresh random direction,
which in high dimension is nearly orthogonal to everything else.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..core import GeoPoint, Observation, Tracklet, l2_normalize
from .scenario import GtBox

_TAG_IDENTITY = 3
_TAG_CAMBIAS = 4
_TAG_NOISE = 5


class OracleFeatureProvider:
    def __init__(
        self,
        boxes: Sequence[GtBox],
        dim: int = 64,
        seed: int = 0,
        noise: float = 0.0,
        camera_bias: float = 0.0,
        match_tol_px: float = 12.0,
    ):
        if dim < 1:
            raise ValueError("feature dim must be >= 1")
        self._dim = dim
        self._seed = seed
        self._noise = noise
        self._bias_scale = camera_bias
        self._tol = match_tol_px
        self._index: dict[tuple[str, int], list[tuple[float, float, int]]] = {}
        for b in boxes:
            self._index.setdefault((b.camera_id, b.frame_index), []).append(
                (b.bbox.cx, b.bbox.cy, b.vehicle_id))
        self._cameras = sorted({b.camera_id for b in boxes})
        self._identities: dict[int, np.ndarray] = {}
        self._biases: dict[str, np.ndarray] = {}
        self._rngs: dict[str, np.random.Generator] = {}

    def identity(self, vehicle_id: int) -> np.ndarray:
        f = self._identities.get(vehicle_id)
        if f is None:
            if vehicle_id < self._dim:
                f = np.zeros(self._dim)
                f[vehicle_id] = 1.0
            else:
                rng = np.random.default_rng(
                    np.random.SeedSequence([self._seed, _TAG_IDENTITY, vehicle_id]))
                f = l2_normalize(rng.standard_normal(self._dim))
            self._identities[vehicle_id] = f
        return f

    def _bias(self, camera_id: str) -> np.ndarray:
        b = self._biases.get(camera_id)
        if b is None:
            idx = self._camera_index(camera_id)
            rng = np.random.default_rng(
                np.random.SeedSequence([self._seed, _TAG_CAMBIAS, idx]))
            b = l2_normalize(rng.standard_normal(self._dim))
            self._biases[camera_id] = b
        return b

    def _camera_index(self, camera_id: str) -> int:
        try:
            return self._cameras.index(camera_id)
        except ValueError:
            raise ValueError(f"no ground truth for camera {camera_id!r}") from None

    def _rng(self, camera_id: str) -> np.random.Generator:
        rng = self._rngs.get(camera_id)
        if rng is None:
            idx = self._camera_index(camera_id)
            rng = np.random.default_rng(
                np.random.SeedSequence([self._seed, _TAG_NOISE, idx]))
            self._rngs[camera_id] = rng
        return rng

    def match_vehicle(self, camera_id: str, obs: Observation) -> Optional[int]:
        """Ground-truth vehicle whose box center is nearest, within tolerance."""
        best_vid, best_d2 = None, self._tol * self._tol
        for cx, cy, vid in self._index.get((camera_id, obs.frame_index), ()):
            d2 = (cx - obs.bbox.cx) ** 2 + (cy - obs.bbox.cy) ** 2
            if d2 <= best_d2:
                best_vid, best_d2 = vid, d2
        return best_vid

    def extract(self, camera_id: str, observations: Sequence[Observation]) -> np.ndarray:
        rng = self._rng(camera_id)
        rows = []
        for obs in observations:
            vid = self.match_vehicle(camera_id, obs)
            if vid is None:
                f = rng.standard_normal(self._dim)
            else:
                f = self.identity(vid).copy()
                if self._bias_scale > 0:
                    f += self._bias_scale * self._bias(camera_id)
                if self._noise > 0:
                    f += self._noise * rng.standard_normal(self._dim)
            rows.append(l2_normalize(f))
        if not rows:
            return np.zeros((0, self._dim))
        return np.stack(rows)


class StubFeatureProvider:
    """Constant feature; useful when only timing or plumbing is under test."""

    def __init__(self, dim: int = 64):
        self._row = np.full(dim, dim ** -0.5)

    def extract(self, camera_id: str, observations: Sequence[Observation]) -> np.ndarray:
        return np.tile(self._row, (len(observations), 1))


def tracklets_from_ground_truth(
    boxes: Sequence[GtBox],
    fps: float,
    provider: Optional[OracleFeatureProvider] = None,
) -> dict[str, list[Tracklet]]:
    """Ideal per-camera tracklets: one per (camera, vehicle), no noise.

    Track ids reuse vehicle ids, so cross-camera identity is trivially
    checkable. Features come from the provider's identity vectors when one
    is given.
    """
    frame_ms = 1000.0 / fps
    grouped: dict[tuple[str, int], list[GtBox]] = {}
    for b in boxes:
        grouped.setdefault((b.camera_id, b.vehicle_id), []).append(b)
    out: dict[str, list[Tracklet]] = {}
    for (cam, vid), rows in sorted(grouped.items()):
        rows.sort(key=lambda b: b.frame_index)
        obs = tuple(
            Observation(
                frame_index=b.frame_index,
                timestamp_ms=b.frame_index * frame_ms,
                bbox=b.bbox,
                confidence=1.0,
                gps=GeoPoint(b.lat, b.lon),
            )
            for b in rows
        )
        feature = provider.identity(vid) if provider is not None else None
        out.setdefault(cam, []).append(
            Tracklet(camera_id=cam, track_id=vid, observations=obs, feature=feature))
    return out
