"""Multi-camera vehicle tracking over simulated edge devices.

Per-camera edges detect, filter and track vehicles, geo-reference them,
and ship compact per-track summaries over a lossy channel. A central
server heals fragmented tracks, learns which camera hands traffic to
which (and how long the hop takes), and stitches tracks into global
identities. Everything runs against a synthetic corridor world with
ground truth, so the whole loop is scoreable.
"""

from .config import ConfigError, RunManifest
from .core import (
    BBox,
    Detection,
    GeoPoint,
    Observation,
    Tracklet,
    aggregate_features,
    cosine_similarity,
    iou,
    l2_normalize,
)
from .run import RunResult, run, run_edges_offline

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "ConfigError",
    "Detection",
    "GeoPoint",
    "Observation",
    "RunManifest",
    "RunResult",
    "Tracklet",
    "aggregate_features",
    "cosine_similarity",
    "iou",
    "l2_normalize",
    "run",
    "run_edges_offline",
    "__version__",
]
