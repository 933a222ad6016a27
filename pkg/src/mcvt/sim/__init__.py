"""Synthetic multi-camera traffic: world model, detection rendering, and
oracle appearance features."""

from .features import OracleFeatureProvider, StubFeatureProvider, tracklets_from_ground_truth
from .render import Dataset, render_frames, write_dataset
from .scenario import (
    CorridorWorld,
    GroundTruth,
    GtBox,
    GtTransition,
    ScenarioConfig,
    VehicleTruth,
    build_world,
    generate_ground_truth,
    read_gt_boxes,
    read_gt_transitions,
    read_scenario,
    read_topology,
    true_bbox,
    write_gt_boxes,
    write_gt_transitions,
    write_scenario,
    write_topology,
)

__all__ = [
    "CorridorWorld",
    "Dataset",
    "GroundTruth",
    "GtBox",
    "GtTransition",
    "OracleFeatureProvider",
    "ScenarioConfig",
    "StubFeatureProvider",
    "VehicleTruth",
    "build_world",
    "generate_ground_truth",
    "read_gt_boxes",
    "read_gt_transitions",
    "read_scenario",
    "read_topology",
    "render_frames",
    "tracklets_from_ground_truth",
    "true_bbox",
    "write_dataset",
    "write_gt_boxes",
    "write_gt_transitions",
    "write_scenario",
    "write_topology",
]
