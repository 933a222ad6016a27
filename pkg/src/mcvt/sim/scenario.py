"""Synthetic corridor world: a straight road observed by a chain of
overhead cameras, with ground truth good enough to score against.

Geometry is arranged so the numbers stay easy to reason about. Each camera
looks straight down from ``camera_height_m`` and sees a window of
``window_m`` meters of road; consecutive windows are separated by
``segment_m`` meters of unobserved road. A vehicle travelling at v m/s is
therefore out of view for exactly ``segment_m / v`` seconds between
cameras, up to frame quantization. Pixels per meter follow from requiring
a vehicle's box to fit the image exactly at the window edges:

    px_per_m = image_w / (window_m + vehicle_length_m)

Vehicles drive whole lanes at constant speed and never change lanes. Spawn
spacing within a lane is validated against the speed spread so a faster
vehicle can never catch a slower one inside the corridor; overlapping
same-lane boxes would make "perfect tracking" an ill-posed target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..config import ConfigError, apply_kv, read_kv, write_kv
from ..core import BBox, GeoPoint
from ..edge.geomap import CameraModel, nadir_rotation

_TAG_VEHICLES = 1


# ---------------------------------------------------------------------------
# scenario knobs


@dataclass
class ScenarioConfig:
    name: str = "corridor"
    n_cameras: int = 4
    image_w: int = 1280
    image_h: int = 720
    fps: float = 15.0
    camera_height_m: float = 12.0
    geo_origin_lat: float = 37.0
    geo_origin_lon: float = -122.0

    # road layout
    window_m: float = 70.0
    segment_m: float = 120.0
    margin_m: float = 40.0
    lane_width_m: float = 3.5
    lanes_per_direction: int = 2
    directions: str = "both"      # "both", "east" or "west"

    # traffic
    n_vehicles: int = 24
    vehicle_length_m: float = 6.0
    vehicle_width_m: float = 2.5
    vehicle_center_height_m: float = 0.5
    speed_min_mps: float = 8.0
    speed_max_mps: float = 12.0
    spawn_spacing_s: float = 32.0
    duration_s: float = 0.0       # 0 = run until the last vehicle clears

    # detector imperfections
    det_miss_prob: float = 0.0
    det_jitter_px: float = 0.0
    conf_mean: float = 1.0
    conf_sigma: float = 0.0
    fp_rate: float = 0.0          # false positives per frame (Poisson)
    frame_drop_prob: float = 0.0

    # appearance model
    feature_dim: int = 64
    feature_noise: float = 0.0
    camera_bias: float = 0.0

    @property
    def px_per_m(self) -> float:
        return self.image_w / (self.window_m + self.vehicle_length_m)

    @property
    def corridor_len_m(self) -> float:
        return (2.0 * self.margin_m + self.n_cameras * self.window_m
                + (self.n_cameras - 1) * self.segment_m)

    def camera_x(self, k: int) -> float:
        return self.margin_m + self.window_m / 2.0 + k * (self.window_m + self.segment_m)

    def validate(self) -> None:
        if self.n_cameras < 1:
            raise ConfigError("n_cameras must be >= 1")
        if self.image_w <= 0 or self.image_h <= 0:
            raise ConfigError("image dimensions must be positive")
        if self.fps <= 0:
            raise ConfigError("fps must be positive")
        if self.directions not in ("both", "east", "west"):
            raise ConfigError(f"directions must be both/east/west, got {self.directions!r}")
        if self.window_m <= 0 or self.segment_m < 0 or self.margin_m < 0:
            raise ConfigError("window_m must be > 0, segment_m and margin_m >= 0")
        if self.lanes_per_direction < 1:
            raise ConfigError("lanes_per_direction must be >= 1")
        if min(self.vehicle_length_m, self.vehicle_width_m, self.lane_width_m) <= 0:
            raise ConfigError("vehicle and lane dimensions must be positive")
        if self.camera_height_m <= self.vehicle_center_height_m:
            raise ConfigError("camera_height_m must exceed vehicle_center_height_m")
        if not (0 < self.speed_min_mps <= self.speed_max_mps):
            raise ConfigError("need 0 < speed_min_mps <= speed_max_mps")
        if self.n_vehicles < 0:
            raise ConfigError("n_vehicles must be >= 0")
        if self.spawn_spacing_s <= 0 or self.duration_s < 0:
            raise ConfigError("spawn_spacing_s must be > 0 and duration_s >= 0")
        for name in ("det_miss_prob", "frame_drop_prob", "conf_mean"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if min(self.det_jitter_px, self.conf_sigma, self.fp_rate,
               self.feature_noise, self.camera_bias) < 0:
            raise ConfigError("noise knobs must be >= 0")
        if self.feature_dim < 1:
            raise ConfigError("feature_dim must be >= 1")
        # same-lane overtake guard: over the full corridor a fast follower
        # gains at most corridor * (1/v_min - 1/v_max) seconds
        gain_s = self.corridor_len_m * (1.0 / self.speed_min_mps - 1.0 / self.speed_max_mps)
        if self.spawn_spacing_s <= gain_s:
            raise ConfigError(
                f"spawn_spacing_s={self.spawn_spacing_s} allows same-lane overtakes; "
                f"need more than {gain_s:.1f}s for this corridor and speed range"
            )

    def as_kv(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


def read_scenario(path: str | Path) -> ScenarioConfig:
    cfg = ScenarioConfig()
    apply_kv(cfg, read_kv(path))
    cfg.validate()
    return cfg


def write_scenario(path: str | Path, cfg: ScenarioConfig) -> None:
    write_kv(path, cfg.as_kv(), header="scenario definition")


# ---------------------------------------------------------------------------
# world construction


@dataclass(frozen=True)
class VehicleTruth:
    vehicle_id: int
    direction: int          # +1 east, -1 west
    lane_y_m: float
    speed_mps: float
    spawn_s: float

    def x_at(self, t_s: float, corridor_len_m: float) -> float:
        if self.direction > 0:
            return self.speed_mps * (t_s - self.spawn_s)
        return corridor_len_m - self.speed_mps * (t_s - self.spawn_s)


@dataclass
class CorridorWorld:
    cfg: ScenarioConfig
    cameras: list[CameraModel]
    vehicles: list[VehicleTruth]
    duration_s: float
    pairs: list[tuple[str, str]]


def _camera_model(cfg: ScenarioConfig, k: int) -> CameraModel:
    f = cfg.px_per_m * (cfg.camera_height_m - cfg.vehicle_center_height_m)
    return CameraModel(
        camera_id=f"cam{k:02d}",
        image_w=cfg.image_w,
        image_h=cfg.image_h,
        fx=f, fy=f,
        cx=cfg.image_w / 2.0, cy=cfg.image_h / 2.0,
        rotation=nadir_rotation(),
        position=np.array([cfg.camera_x(k), 0.0, cfg.camera_height_m]),
        origin=GeoPoint(cfg.geo_origin_lat, cfg.geo_origin_lon),
    )


def build_world(cfg: ScenarioConfig, seed: int) -> CorridorWorld:
    cfg.validate()
    cameras = [_camera_model(cfg, k) for k in range(cfg.n_cameras)]

    dirs = {"both": (1, -1), "east": (1,), "west": (-1,)}[cfg.directions]
    lanes: list[tuple[int, float]] = []
    for d in dirs:
        for j in range(cfg.lanes_per_direction):
            # eastbound lanes north of the median, westbound south
            lanes.append((d, d * cfg.lane_width_m * (j + 0.5)))

    rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_VEHICLES]))
    speeds = rng.uniform(cfg.speed_min_mps, cfg.speed_max_mps, cfg.n_vehicles)
    n_lanes = len(lanes)
    vehicles = []
    for i in range(cfg.n_vehicles):
        direction, lane_y = lanes[i % n_lanes]
        # lanes take turns spawning so traffic interleaves across the road
        spawn = (i // n_lanes) * cfg.spawn_spacing_s \
            + (i % n_lanes) * (cfg.spawn_spacing_s / n_lanes)
        vehicles.append(VehicleTruth(
            vehicle_id=i, direction=direction, lane_y_m=lane_y,
            speed_mps=float(speeds[i]), spawn_s=spawn,
        ))

    if cfg.duration_s > 0:
        duration = cfg.duration_s
    elif vehicles:
        duration = max(v.spawn_s + cfg.corridor_len_m / v.speed_mps for v in vehicles) + 1.0
    else:
        duration = 1.0

    pairs = []
    if 1 in dirs:
        pairs += [(cameras[k].camera_id, cameras[k + 1].camera_id)
                  for k in range(cfg.n_cameras - 1)]
    if -1 in dirs:
        pairs += [(cameras[k + 1].camera_id, cameras[k].camera_id)
                  for k in range(cfg.n_cameras - 1)]
    return CorridorWorld(cfg=cfg, cameras=cameras, vehicles=vehicles,
                         duration_s=duration, pairs=pairs)


# ---------------------------------------------------------------------------
# ground truth


@dataclass(frozen=True)
class GtBox:
    camera_id: str
    frame_index: int
    vehicle_id: int
    bbox: BBox
    lat: float
    lon: float


@dataclass(frozen=True)
class GtTransition:
    from_camera: str
    to_camera: str
    vehicle_id: int
    exit_ms: float
    enter_ms: float

    @property
    def gap_s(self) -> float:
        return (self.enter_ms - self.exit_ms) / 1000.0


@dataclass
class GroundTruth:
    boxes: list[GtBox]
    transitions: list[GtTransition]

    def frame_count(self) -> int:
        return 1 + max((b.frame_index for b in self.boxes), default=-1)


def true_bbox(world: CorridorWorld, cam: CameraModel, vehicle: VehicleTruth,
              t_s: float) -> Optional[BBox]:
    """The vehicle's box in this camera, or None unless it fits entirely."""
    cfg = world.cfg
    ppm = cfg.px_per_m
    x = vehicle.x_at(t_s, cfg.corridor_len_m)
    u_c = cam.cx + (x - cam.position[0]) * ppm
    v_c = cam.cy - vehicle.lane_y_m * ppm
    w_px = cfg.vehicle_length_m * ppm
    h_px = cfg.vehicle_width_m * ppm
    box = BBox(u_c - w_px / 2.0, v_c - h_px / 2.0, w_px, h_px)
    eps = 1e-9
    if (box.x >= -eps and box.y >= -eps
            and box.x + box.w <= cfg.image_w + eps
            and box.y + box.h <= cfg.image_h + eps):
        return box
    return None


def generate_ground_truth(world: CorridorWorld) -> GroundTruth:
    cfg = world.cfg
    n_frames = int(math.ceil(world.duration_s * cfg.fps))
    frame_ms = 1000.0 / cfg.fps
    geo = world.cameras[0]
    boxes: list[GtBox] = []
    spans: dict[tuple[int, str], tuple[float, float]] = {}

    for cam in world.cameras:
        cam_x = float(cam.position[0])
        for v in world.vehicles:
            # candidate frame range from the visibility window, then verify
            # each frame against the exact box test
            if v.direction > 0:
                t_a = v.spawn_s + (cam_x - cfg.window_m / 2.0) / v.speed_mps
            else:
                t_a = v.spawn_s + (cfg.corridor_len_m - cam_x - cfg.window_m / 2.0) / v.speed_mps
            t_in, t_out = t_a, t_a + cfg.window_m / v.speed_mps
            lo = max(0, int(math.floor(t_in * cfg.fps)) - 1)
            hi = min(n_frames - 1, int(math.ceil(t_out * cfg.fps)) + 1)
            for i in range(lo, hi + 1):
                t = i / cfg.fps
                if t < v.spawn_s:
                    continue
                box = true_bbox(world, cam, v, t)
                if box is None:
                    continue
                gps = geo.enu_to_geo(v.x_at(t, cfg.corridor_len_m), v.lane_y_m)
                boxes.append(GtBox(cam.camera_id, i, v.vehicle_id, box, gps.lat, gps.lon))
                ts = i * frame_ms
                key = (v.vehicle_id, cam.camera_id)
                first, _ = spans.get(key, (ts, ts))
                spans[key] = (first, ts)

    boxes.sort(key=lambda b: (b.camera_id, b.frame_index, b.vehicle_id))

    transitions: list[GtTransition] = []
    order = [c.camera_id for c in world.cameras]
    for v in world.vehicles:
        visit = order if v.direction > 0 else list(reversed(order))
        for a, b in zip(visit, visit[1:]):
            sa, sb = spans.get((v.vehicle_id, a)), spans.get((v.vehicle_id, b))
            if sa is None or sb is None:
                continue
            transitions.append(GtTransition(a, b, v.vehicle_id,
                                            exit_ms=sa[1], enter_ms=sb[0]))
    transitions.sort(key=lambda t: (t.from_camera, t.to_camera, t.exit_ms))
    return GroundTruth(boxes=boxes, transitions=transitions)


# ---------------------------------------------------------------------------
# ground truth files


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_gt_boxes(path: str | Path, boxes: Sequence[GtBox]) -> None:
    lines = ["# camera frame vehicle x y w h lat lon"]
    for b in boxes:
        lines.append(
            f"{b.camera_id} {b.frame_index} {b.vehicle_id} "
            f"{_fmt(b.bbox.x)} {_fmt(b.bbox.y)} {_fmt(b.bbox.w)} {_fmt(b.bbox.h)} "
            f"{_fmt(b.lat)} {_fmt(b.lon)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_gt_boxes(path: str | Path) -> list[GtBox]:
    boxes = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 9:
            raise ValueError(f"{path}:{lineno}: expected 9 fields, got {len(toks)}")
        boxes.append(GtBox(
            camera_id=toks[0], frame_index=int(toks[1]), vehicle_id=int(toks[2]),
            bbox=BBox(float(toks[3]), float(toks[4]), float(toks[5]), float(toks[6])),
            lat=float(toks[7]), lon=float(toks[8]),
        ))
    return boxes


def write_gt_transitions(path: str | Path, transitions: Sequence[GtTransition]) -> None:
    lines = ["# from_camera to_camera vehicle exit_ms enter_ms"]
    for t in transitions:
        lines.append(f"{t.from_camera} {t.to_camera} {t.vehicle_id} "
                     f"{_fmt(t.exit_ms)} {_fmt(t.enter_ms)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_gt_transitions(path: str | Path) -> list[GtTransition]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 5:
            raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(toks)}")
        out.append(GtTransition(toks[0], toks[1], int(toks[2]),
                                exit_ms=float(toks[3]), enter_ms=float(toks[4])))
    return out


# ---------------------------------------------------------------------------
# topology file: which cameras exist and which ordered pairs are linked


def write_topology(path: str | Path, cameras: Sequence[CameraModel],
                   pairs: Sequence[tuple[str, str]]) -> None:
    lines = ["# camera <id> <image_w> <image_h>   /   pair <from> <to>"]
    for cam in cameras:
        lines.append(f"camera {cam.camera_id} {cam.image_w} {cam.image_h}")
    for a, b in pairs:
        lines.append(f"pair {a} {b}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_topology(
    path: str | Path,
) -> tuple[list[tuple[str, int, int]], list[tuple[str, str]]]:
    cameras: list[tuple[str, int, int]] = []
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "camera" and len(toks) == 4:
            cameras.append((toks[1], int(toks[2]), int(toks[3])))
        elif toks[0] == "pair" and len(toks) == 3:
            pairs.append((toks[1], toks[2]))
        else:
            raise ValueError(f"{path}:{lineno}: unrecognized topology line {raw!r}")
    return cameras, pairs
