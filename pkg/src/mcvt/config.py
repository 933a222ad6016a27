"""Tunable knobs for every stage, with their stock defaults, plus the
line-oriented ``key value`` config file format shared by scenario files,
run manifests, and calibration files.

File syntax: one ``key value...`` pair per line, ``#`` starts a comment,
blank lines are ignored. The first whitespace-separated token is the key,
the remainder (stripped) is the value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """A config file, manifest, or flag failed validation."""


# ---------------------------------------------------------------------------
# per-stage knob bundles


@dataclass
class MotionGateConfig:
    # cell counts of the low-resolution activity raster, not full-res pixels
    pixel_threshold: int = 300
    learning_rate: float = 0.01
    sigma_mult: float = 2.5
    variance_floor: float = 4.0


@dataclass
class DetectionFilterConfig:
    confidence_threshold: float = 0.35
    nms_iou: float = 0.40


@dataclass
class TrackerConfig:
    high_threshold: float = 0.5
    low_threshold: float = 0.1
    new_track_threshold: float = 0.6
    first_match_iou: float = 0.3
    second_match_iou: float = 0.5
    max_age: int = 30
    confirm_hits: int = 2


@dataclass
class SchedulerConfig:
    subsample_init: int = 5
    subsample_min: int = 1
    subsample_max: int = 15
    queue_threshold: int = 10
    hard_cap: int = 100
    tasks_per_tick: int = 1

    def validate(self) -> None:
        if not (1 <= self.subsample_min <= self.subsample_init <= self.subsample_max):
            raise ConfigError(
                "subsample bounds must satisfy 1 <= min <= init <= max, got "
                f"min={self.subsample_min} init={self.subsample_init} max={self.subsample_max}"
            )
        if self.queue_threshold < 0 or self.hard_cap <= 0:
            raise ConfigError("queue_threshold must be >= 0 and hard_cap > 0")


@dataclass
class EdgeConfig:
    gate: MotionGateConfig = field(default_factory=MotionGateConfig)
    det_filter: DetectionFilterConfig = field(default_factory=DetectionFilterConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    gate_enabled: bool = True
    # assumed height of a vehicle's visual center above the ground plane
    mapping_height_m: float = 0.5


@dataclass
class ChannelConfig:
    base_latency_ms: float = 0.0
    jitter_ms: float = 0.0
    loss_prob: float = 0.0

    def validate(self) -> None:
        if not (0.0 <= self.loss_prob <= 1.0):
            raise ConfigError(f"loss_prob must be in [0, 1], got {self.loss_prob}")
        if self.jitter_ms < 0 or self.base_latency_ms < 0:
            raise ConfigError("latency and jitter must be >= 0")
        if self.base_latency_ms - self.jitter_ms < 0:
            raise ConfigError(
                "base_latency_ms must be >= jitter_ms so deliveries never precede sends"
            )


@dataclass
class RemergeConfig:
    enabled: bool = True
    max_gap_s: float = 4.0
    max_center_dist_frac: float = 0.25
    max_feature_dist: float = 0.2


@dataclass
class ZoneConfig:
    eps_frac: float = 0.05   # clustering radius as a fraction of image width
    min_pts: int = 5
    # membership slack when gating, in the same image-width fraction
    slack_frac: float = 0.05


@dataclass
class LinkConfig:
    kde_bandwidth_s: float = 5.0
    min_density: float = 0.002
    pair_margin: float = 0.5
    pair_window_s: float = 120.0
    min_link_score: float = 1.0
    min_link_samples: int = 3


@dataclass
class AssociationConfig:
    cycle_period_s: float = 200.0
    buffer_horizon_s: float = 300.0
    appearance_weight: float = 1.0
    temporal_weight: float = 5.0
    match_threshold: float = 0.4

    def validate(self) -> None:
        if self.buffer_horizon_s < self.cycle_period_s:
            raise ConfigError(
                "buffer_horizon_s must be >= cycle_period_s so every tracklet survives "
                "at least one association cycle"
            )


# ---------------------------------------------------------------------------
# key-value file io


def read_kv(path: str | Path) -> dict[str, str]:
    """Parse a ``key value`` file into a dict. Later keys override earlier ones."""
    out: dict[str, str] = {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ConfigError(f"{p}:{lineno}: expected 'key value', got {raw!r}")
        out[parts[0]] = parts[1].strip()
    return out


def write_kv(path: str | Path, pairs: dict[str, Any], header: str = "") -> None:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    for k, v in pairs.items():
        if isinstance(v, bool):
            v = int(v)
        if isinstance(v, float):
            v = format(v, ".9g")
        lines.append(f"{k} {v}")
    Path(path).write_text("\n".join(lines) + "\n")


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def coerce(value: str, kind: type) -> Any:
    if kind is bool:
        low = value.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"expected a boolean, got {value!r}")
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"expected {kind.__name__}, got {value!r}") from exc


def apply_kv(obj: Any, kv: dict[str, str], *, unknown: str = "error") -> set[str]:
    """Overwrite dataclass fields from string kv pairs; returns the keys consumed."""
    by_name = {f.name: f for f in fields(obj)}
    used = set()
    for key, value in kv.items():
        f = by_name.get(key)
        if f is None:
            if unknown == "error":
                raise ConfigError(f"unknown config key: {key}")
            continue
        kind = {"int": int, "float": float, "bool": bool, "str": str}.get(f.type, None)
        if kind is None:
            kind = f.type if isinstance(f.type, type) else str
        setattr(obj, key, coerce(value, kind))
        used.add(key)
    return used


# ---------------------------------------------------------------------------
# run manifest: the flat surface the CLI and config files share


@dataclass
class RunManifest:
    """Everything a full run needs; every field doubles as a CLI flag."""

    # paths and modes
    scenario: str = ""
    data_dir: str = ""
    links_path: str = ""
    out_dir: str = ""
    mode: str = "virtual"        # "virtual" or "wallclock"
    seed: int = 0                # channel draws and stubbed features
    gate: bool = True
    remerge: bool = True
    stub_features: bool = False  # constant vectors instead of the oracle provider

    # edge: motion gate
    pixel_threshold: int = 300
    gate_learning_rate: float = 0.01
    gate_sigma_mult: float = 2.5
    gate_variance_floor: float = 4.0

    # edge: detection filter
    confidence_threshold: float = 0.35
    nms_iou: float = 0.40

    # edge: tracker
    high_threshold: float = 0.5
    low_threshold: float = 0.1
    new_track_threshold: float = 0.6
    first_match_iou: float = 0.3
    second_match_iou: float = 0.5
    max_age: int = 30
    confirm_hits: int = 2

    # edge: feature scheduler
    subsample_init: int = 5
    subsample_min: int = 1
    subsample_max: int = 15
    queue_threshold: int = 10
    queue_hard_cap: int = 100
    tasks_per_tick: int = 1

    # edge: geo-mapping
    mapping_height_m: float = 0.5

    # channel
    channel_latency_ms: float = 0.0
    channel_jitter_ms: float = 0.0
    channel_loss: float = 0.0

    # server: re-merge
    remerge_max_gap_s: float = 4.0
    remerge_max_center_dist_frac: float = 0.25
    remerge_max_feature_dist: float = 0.2

    # server: zones and camera links
    zone_eps_frac: float = 0.05
    zone_min_pts: int = 5
    zone_slack_frac: float = 0.05
    kde_bandwidth_s: float = 5.0
    min_density: float = 0.002
    pair_margin: float = 0.5
    pair_window_s: float = 120.0
    min_link_score: float = 1.0
    min_link_samples: int = 3

    # server: association
    cycle_period_s: float = 200.0
    buffer_horizon_s: float = 300.0
    appearance_weight: float = 1.0
    temporal_weight: float = 5.0
    match_threshold: float = 0.4

    # eval
    eval_iou: float = 0.5

    @classmethod
    def from_file(cls, path: str | Path) -> "RunManifest":
        m = cls()
        apply_kv(m, read_kv(path))
        m.validate()
        return m

    def apply_overrides(self, kv: dict[str, str]) -> None:
        apply_kv(self, kv)
        self.validate()

    def validate(self) -> None:
        if self.mode not in ("virtual", "wallclock"):
            raise ConfigError(f"mode must be 'virtual' or 'wallclock', got {self.mode!r}")
        self.scheduler_config().validate()
        self.channel_config().validate()
        self.association_config().validate()
        for name in ("confidence_threshold", "nms_iou", "channel_loss", "eval_iou"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {v}")

    # knob bundles for the stages

    def edge_config(self) -> EdgeConfig:
        return EdgeConfig(
            gate=MotionGateConfig(
                pixel_threshold=self.pixel_threshold,
                learning_rate=self.gate_learning_rate,
                sigma_mult=self.gate_sigma_mult,
                variance_floor=self.gate_variance_floor,
            ),
            det_filter=DetectionFilterConfig(
                confidence_threshold=self.confidence_threshold,
                nms_iou=self.nms_iou,
            ),
            tracker=TrackerConfig(
                high_threshold=self.high_threshold,
                low_threshold=self.low_threshold,
                new_track_threshold=self.new_track_threshold,
                first_match_iou=self.first_match_iou,
                second_match_iou=self.second_match_iou,
                max_age=self.max_age,
                confirm_hits=self.confirm_hits,
            ),
            scheduler=self.scheduler_config(),
            gate_enabled=self.gate,
            mapping_height_m=self.mapping_height_m,
        )

    def scheduler_config(self) -> SchedulerConfig:
        return SchedulerConfig(
            subsample_init=self.subsample_init,
            subsample_min=self.subsample_min,
            subsample_max=self.subsample_max,
            queue_threshold=self.queue_threshold,
            hard_cap=self.queue_hard_cap,
            tasks_per_tick=self.tasks_per_tick,
        )

    def channel_config(self) -> ChannelConfig:
        return ChannelConfig(
            base_latency_ms=self.channel_latency_ms,
            jitter_ms=self.channel_jitter_ms,
            loss_prob=self.channel_loss,
        )

    def remerge_config(self) -> RemergeConfig:
        return RemergeConfig(
            enabled=self.remerge,
            max_gap_s=self.remerge_max_gap_s,
            max_center_dist_frac=self.remerge_max_center_dist_frac,
            max_feature_dist=self.remerge_max_feature_dist,
        )

    def zone_config(self) -> ZoneConfig:
        return ZoneConfig(
            eps_frac=self.zone_eps_frac,
            min_pts=self.zone_min_pts,
            slack_frac=self.zone_slack_frac,
        )

    def link_config(self) -> LinkConfig:
        return LinkConfig(
            kde_bandwidth_s=self.kde_bandwidth_s,
            min_density=self.min_density,
            pair_margin=self.pair_margin,
            pair_window_s=self.pair_window_s,
            min_link_score=self.min_link_score,
            min_link_samples=self.min_link_samples,
        )

    def association_config(self) -> AssociationConfig:
        return AssociationConfig(
            cycle_period_s=self.cycle_period_s,
            buffer_horizon_s=self.buffer_horizon_s,
            appearance_weight=self.appearance_weight,
            temporal_weight=self.temporal_weight,
            match_threshold=self.match_threshold,
        )
