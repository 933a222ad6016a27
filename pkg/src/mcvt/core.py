"""Domain types shared by every stage, and the small geometry / feature math
(box overlap, cosine similarity, confidence-weighted feature aggregation)
that the edge and server sides both build on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

# a 1-D float64 embedding; unit L2 norm once aggregated
FeatureVector = np.ndarray


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box; (x, y) is the top-left corner."""

    x: float
    y: float
    w: float
    h: float

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_xyxy(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.x + self.w, self.y + self.h)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union. Total on degenerate boxes: zero area gives 0."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    # rounding in w*h vs the xyxy difference can push self-overlap past 1
    return min(inter / union, 1.0)


def center_distance(a: BBox, b: BBox) -> float:
    """Euclidean distance between box centers, in pixels."""
    return math.hypot(a.cx - b.cx, a.cy - b.cy)


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float


@dataclass(frozen=True)
class Detection:
    camera_id: str
    frame_index: int
    timestamp_ms: float
    bbox: BBox
    confidence: float
    class_id: int = 0


@dataclass(frozen=True)
class Observation:
    """One tracked frame of a tracklet."""

    frame_index: int
    timestamp_ms: float
    bbox: BBox
    confidence: float
    gps: Optional[GeoPoint] = None


@dataclass(frozen=True, eq=False)
class Tracklet:
    """A single-camera track fragment with at most one aggregated feature."""

    camera_id: str
    track_id: int
    observations: tuple[Observation, ...]
    feature: Optional[FeatureVector] = None

    def __post_init__(self) -> None:
        if not self.observations:
            raise ValueError("a tracklet needs at least one observation")
        frames = [o.frame_index for o in self.observations]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("observations must be strictly increasing in frame_index")

    @property
    def start_ms(self) -> float:
        return self.observations[0].timestamp_ms

    @property
    def end_ms(self) -> float:
        return self.observations[-1].timestamp_ms

    @property
    def first_center(self) -> tuple[float, float]:
        b = self.observations[0].bbox
        return (b.cx, b.cy)

    @property
    def last_center(self) -> tuple[float, float]:
        b = self.observations[-1].bbox
        return (b.cx, b.cy)

    def with_feature(self, feature: FeatureVector) -> "Tracklet":
        return replace(self, feature=feature)

    def key(self) -> tuple[str, int]:
        return (self.camera_id, self.track_id)


# ---------------------------------------------------------------------------
# feature math


def l2_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n == 0.0 or not math.isfinite(n):
        raise ValueError("cannot normalize a zero or non-finite vector")
    return v / n


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


def aggregate_features(
    features: Sequence[np.ndarray] | np.ndarray,
    confidences: Sequence[float] | np.ndarray,
) -> np.ndarray:
    """Confidence-weighted sum of per-frame features, L2-normalized.

    The weights are the raw detection confidences; scaling all of them by a
    common positive factor does not change the result.
    """
    feats = np.asarray(features, dtype=np.float64)
    conf = np.asarray(confidences, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError("features must be a (count, dim) array")
    if conf.shape != (feats.shape[0],):
        raise ValueError("need one confidence per feature")
    if np.any(conf < 0.0):
        raise ValueError("confidences must be >= 0")
    if not np.any(conf > 0.0):
        raise ValueError("all-zero confidences cannot weight an aggregate")
    weighted = conf @ feats
    norm = float(np.linalg.norm(weighted))
    if norm == 0.0:
        raise ValueError("weighted feature sum has zero norm")
    return weighted / norm
