from .gate import MotionGate
from .filtering import filter_detections
from .kalman import BoxKalman, FilterNumericsError
from .tracker import SingleCameraTracker, Track, TrackState
from .geomap import (
    EARTH_RADIUS_M,
    CameraModel,
    geo_map,
    read_calibration,
    write_calibration,
)
from .scheduler import FeatureProvider, FeatureQueue, FeatureTask, extract_and_attach
from .pipeline import EdgePipeline

__all__ = [
    "MotionGate",
    "filter_detections",
    "BoxKalman",
    "FilterNumericsError",
    "SingleCameraTracker",
    "Track",
    "TrackState",
    "EARTH_RADIUS_M",
    "CameraModel",
    "geo_map",
    "read_calibration",
    "write_calibration",
    "FeatureProvider",
    "FeatureQueue",
    "FeatureTask",
    "extract_and_attach",
    "EdgePipeline",
]
