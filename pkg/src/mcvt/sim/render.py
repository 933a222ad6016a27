"""Turn ground truth into the detection streams an edge box would see.

Noise model, applied per camera with its own random stream so cameras can
be rendered (or replayed) independently:

  * whole frames vanish with ``frame_drop_prob`` (the edge never sees them)
  * each true box is missed with ``det_miss_prob``
  * surviving boxes get Gaussian center jitter and a noisy confidence
  * ``fp_rate`` false positives per frame (Poisson) appear at random spots

Draw order within a frame is fixed (drop coin, then per-vehicle coins in
vehicle-id order, then false positives), which keeps a rendered dataset
bit-reproducible for a given scenario and seed.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..core import BBox
from ..edge.geomap import write_calibration
from ..wire.codec import FrameMsg, write_frame_stream, read_frame_stream
from .scenario import (
    CorridorWorld,
    GroundTruth,
    GtBox,
    ScenarioConfig,
    build_world,
    generate_ground_truth,
    read_gt_boxes,
    read_gt_transitions,
    read_scenario,
    read_topology,
    write_gt_boxes,
    write_gt_transitions,
    write_scenario,
    write_topology,
)
from ..config import read_kv, write_kv
from ..edge.geomap import CameraModel, read_calibration

_TAG_RENDER = 2


def _clamp_box(box: BBox, image_w: int, image_h: int) -> BBox:
    x = min(max(box.x, 0.0), image_w - box.w)
    y = min(max(box.y, 0.0), image_h - box.h)
    return BBox(x, y, box.w, box.h)


def render_frames(
    world: CorridorWorld, gt: GroundTruth, seed: int
) -> dict[str, list[FrameMsg]]:
    cfg = world.cfg
    n_frames = int(np.ceil(world.duration_s * cfg.fps))
    frame_ms = 1000.0 / cfg.fps
    fp_w = cfg.vehicle_length_m * cfg.px_per_m
    fp_h = cfg.vehicle_width_m * cfg.px_per_m

    by_cam_frame: dict[str, dict[int, list[GtBox]]] = {c.camera_id: {} for c in world.cameras}
    for b in gt.boxes:
        by_cam_frame[b.camera_id].setdefault(b.frame_index, []).append(b)

    out: dict[str, list[FrameMsg]] = {}
    for cam_idx, cam in enumerate(world.cameras):
        rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_RENDER, cam_idx]))
        frames: list[FrameMsg] = []
        lookup = by_cam_frame[cam.camera_id]
        for i in range(n_frames):
            if rng.random() < cfg.frame_drop_prob:
                continue
            dets: list[tuple[BBox, float, int]] = []
            for b in sorted(lookup.get(i, ()), key=lambda b: b.vehicle_id):
                if rng.random() < cfg.det_miss_prob:
                    continue
                box = b.bbox
                if cfg.det_jitter_px > 0:
                    dx, dy = rng.normal(0.0, cfg.det_jitter_px, 2)
                    box = BBox(box.x + dx, box.y + dy, box.w, box.h)
                conf = cfg.conf_mean
                if cfg.conf_sigma > 0:
                    conf = float(np.clip(rng.normal(cfg.conf_mean, cfg.conf_sigma), 0.05, 1.0))
                dets.append((_clamp_box(box, cfg.image_w, cfg.image_h), conf, 0))
            if cfg.fp_rate > 0:
                for _ in range(rng.poisson(cfg.fp_rate)):
                    w = fp_w * rng.uniform(0.7, 1.3)
                    h = fp_h * rng.uniform(0.7, 1.3)
                    x = rng.uniform(0.0, cfg.image_w - w)
                    y = rng.uniform(0.0, cfg.image_h - h)
                    conf = float(rng.uniform(0.4, 0.75))
                    dets.append((BBox(x, y, w, h), conf, 0))
            frames.append(FrameMsg(
                camera_id=cam.camera_id, frame_index=i, timestamp_ms=i * frame_ms,
                detections=tuple(dets),
            ))
        out[cam.camera_id] = frames
    return out


# ---------------------------------------------------------------------------
# dataset directory layout
#
#   scenario.txt     resolved scenario (duration made explicit)
#   meta.txt         generator seed and frame count
#   topology.txt     cameras and declared directed pairs
#   calib_<cam>.txt  one calibration per camera
#   frames_<cam>.bin binary frame stream per camera
#   gt_boxes.txt, gt_transitions.txt


def write_dataset(out_dir: str | Path, cfg: ScenarioConfig, seed: int,
                  ) -> tuple[CorridorWorld, GroundTruth]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    world = build_world(cfg, seed)
    gt = generate_ground_truth(world)
    frames = render_frames(world, gt, seed)

    resolved = replace(cfg, duration_s=world.duration_s)
    write_scenario(out / "scenario.txt", resolved)
    write_kv(out / "meta.txt", {
        "seed": seed,
        "n_frames": int(np.ceil(world.duration_s * cfg.fps)),
    }, header="generator metadata")
    write_topology(out / "topology.txt", world.cameras, world.pairs)
    for cam in world.cameras:
        write_calibration(out / f"calib_{cam.camera_id}.txt", cam)
        write_frame_stream(out / f"frames_{cam.camera_id}.bin", frames[cam.camera_id])
    write_gt_boxes(out / "gt_boxes.txt", gt.boxes)
    write_gt_transitions(out / "gt_transitions.txt", gt.transitions)
    return world, gt


class Dataset:
    """A rendered dataset directory, loaded back into memory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.scenario = read_scenario(self.root / "scenario.txt")
        meta = read_kv(self.root / "meta.txt")
        self.seed = int(meta.get("seed", "0"))
        cams, self.pairs = read_topology(self.root / "topology.txt")
        self.cameras: list[CameraModel] = [
            read_calibration(self.root / f"calib_{cam_id}.txt") for cam_id, _, _ in cams
        ]
        self.frames: dict[str, list[FrameMsg]] = {
            cam.camera_id: read_frame_stream(self.root / f"frames_{cam.camera_id}.bin")
            for cam in self.cameras
        }
        gt_boxes = self.root / "gt_boxes.txt"
        self.ground_truth: Optional[GroundTruth] = None
        if gt_boxes.exists():
            transitions_path = self.root / "gt_transitions.txt"
            self.ground_truth = GroundTruth(
                boxes=read_gt_boxes(gt_boxes),
                transitions=(read_gt_transitions(transitions_path)
                             if transitions_path.exists() else []),
            )

    @property
    def image_w_by_camera(self) -> dict[str, float]:
        return {cam.camera_id: float(cam.image_w) for cam in self.cameras}

    def frame_count(self) -> int:
        return max((f.frame_index for msgs in self.frames.values() for f in msgs),
                   default=-1) + 1
