"""Operational reports: does the edge keep up with the camera, and does a
fitted travel-time density resemble what actually happened.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..server.clm import TransitionKde

STAGES = ("gate", "filter", "track", "geomap", "feature")


# ---------------------------------------------------------------------------
# latency traces


@dataclass
class LatencyTrace:
    """Per-frame stage timings and feature-queue depths, one edge run."""

    queue_cap: int
    stage_samples: list[tuple[str, int, str, float]] = field(default_factory=list)
    queue_samples: list[tuple[str, int, int]] = field(default_factory=list)

    def add_stage(self, camera_id: str, frame_index: int, stage: str, ms: float) -> None:
        self.stage_samples.append((camera_id, frame_index, stage, ms))

    def add_queue(self, camera_id: str, frame_index: int, length: int) -> None:
        self.queue_samples.append((camera_id, frame_index, length))

    def save(self, path: str | Path) -> None:
        lines = [f"cap {self.queue_cap}"]
        for cam, fi, stage, ms in self.stage_samples:
            lines.append(f"stage {cam} {fi} {stage} {format(ms, '.9g')}")
        for cam, fi, length in self.queue_samples:
            lines.append(f"queue {cam} {fi} {length}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "LatencyTrace":
        trace = cls(queue_cap=0)
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            try:
                if toks[0] == "cap" and len(toks) == 2:
                    trace.queue_cap = int(toks[1])
                elif toks[0] == "stage" and len(toks) == 5:
                    trace.add_stage(toks[1], int(toks[2]), toks[3], float(toks[4]))
                elif toks[0] == "queue" and len(toks) == 4:
                    trace.add_queue(toks[1], int(toks[2]), int(toks[3]))
                else:
                    raise ValueError("unrecognized record")
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
        return trace


@dataclass(frozen=True)
class StageStats:
    p50_ms: float
    p95_ms: float
    max_ms: float


@dataclass(frozen=True)
class RealtimeReport:
    budget_ms: float
    stages: dict[str, StageStats]
    frame_total: StageStats
    queue_peak: int
    queue_cap: int
    queue_overflow: bool
    realtime: bool          # p95 frame total within budget and no overflow
    n_frames: int


def _stats(values: np.ndarray) -> StageStats:
    return StageStats(
        p50_ms=float(np.percentile(values, 50)),
        p95_ms=float(np.percentile(values, 95)),
        max_ms=float(values.max()),
    )


def realtime_report(trace: LatencyTrace, fps: float) -> RealtimeReport:
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    if not trace.stage_samples:
        raise ValueError("trace holds no stage samples")
    budget = 1000.0 / fps

    by_stage: dict[str, list[float]] = {s: [] for s in STAGES}
    totals: dict[tuple[str, int], float] = {}
    for cam, fi, stage, ms in trace.stage_samples:
        by_stage.setdefault(stage, []).append(ms)
        totals[(cam, fi)] = totals.get((cam, fi), 0.0) + ms

    stages = {s: _stats(np.array(v)) for s, v in by_stage.items() if v}
    frame_total = _stats(np.array(list(totals.values())))
    queue_peak = max((q for _, _, q in trace.queue_samples), default=0)
    overflow = trace.queue_cap > 0 and queue_peak > trace.queue_cap
    return RealtimeReport(
        budget_ms=budget,
        stages=stages,
        frame_total=frame_total,
        queue_peak=queue_peak,
        queue_cap=trace.queue_cap,
        queue_overflow=overflow,
        realtime=(frame_total.p95_ms <= budget) and not overflow,
        n_frames=len(totals),
    )


def format_realtime_report(r: RealtimeReport) -> str:
    lines = [
        f"frames {r.n_frames}  budget {r.budget_ms:.1f} ms/frame",
        f"{'stage':<10}{'p50 ms':>10}{'p95 ms':>10}{'max ms':>10}",
    ]
    for name in list(STAGES) + ["total"]:
        s = r.frame_total if name == "total" else r.stages.get(name)
        if s is None:
            continue
        lines.append(f"{name:<10}{s.p50_ms:>10.3f}{s.p95_ms:>10.3f}{s.max_ms:>10.3f}")
    lines.append(f"queue peak {r.queue_peak} of cap {r.queue_cap}"
                 + ("  OVERFLOW" if r.queue_overflow else ""))
    lines.append("realtime: " + ("yes" if r.realtime else "NO"))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# travel-time density vs reality


@dataclass(frozen=True)
class KdeReport:
    kde_mean_s: float
    true_mean_s: float
    mean_abs_err_s: float
    tv_distance: float
    n_true: int
    n_kde_samples: int
    bin_s: float


def kde_report(kde: TransitionKde, true_gaps_s: Sequence[float],
               bin_s: float = 1.0) -> KdeReport:
    """Compare a fitted density against observed gaps.

    Total variation is computed on bins covering every observed gap; the
    density's mass outside those bins has no truth to stand against, so it
    counts fully toward the distance.
    """
    gaps = np.asarray(true_gaps_s, dtype=np.float64)
    if gaps.size == 0:
        raise ValueError("no true gaps to compare against")
    if bin_s <= 0:
        raise ValueError(f"bin_s must be positive, got {bin_s}")

    lo = np.floor(gaps.min() / bin_s) * bin_s
    hi = np.ceil(gaps.max() / bin_s) * bin_s
    if hi <= lo:
        hi = lo + bin_s
    edges = np.arange(lo, hi + bin_s / 2, bin_s)
    true_mass, _ = np.histogram(gaps, bins=edges)
    true_mass = true_mass / gaps.size
    kde_mass = np.array([kde.mass(edges[i], edges[i + 1])
                         for i in range(len(edges) - 1)])
    tail = max(0.0, 1.0 - float(kde_mass.sum()))
    tv = 0.5 * (float(np.abs(true_mass - kde_mass).sum()) + tail)

    kde_mean = kde.mean
    true_mean = float(gaps.mean())
    return KdeReport(
        kde_mean_s=kde_mean,
        true_mean_s=true_mean,
        mean_abs_err_s=abs(kde_mean - true_mean),
        tv_distance=tv,
        n_true=int(gaps.size),
        n_kde_samples=int(kde.samples.size),
        bin_s=bin_s,
    )


def format_kde_report(name: str, r: KdeReport) -> str:
    return (f"{name}: mean {r.kde_mean_s:.2f}s vs true {r.true_mean_s:.2f}s "
            f"(err {r.mean_abs_err_s:.2f}s), tv {r.tv_distance:.3f}, "
            f"{r.n_kde_samples} samples vs {r.n_true} true gaps")
