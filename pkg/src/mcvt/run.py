"""End-to-end drivers.

Both clock modes run the same two phases. Phase one replays each camera's
frame stream through its edge pipeline and records the (send time, payload)
sequence it would put on the wire; phase two replays those sends through
the lossy channels into the association server on a shared virtual clock.
Edges never read server state, so splitting the phases changes nothing
about the result.

In virtual mode phase one runs sequentially with no timing. In wallclock
mode the edges run as real threads, back to back over their streams, each
recording per-stage wall time; the latency report asks whether the slowest
5% of frames still fit the camera period. Payloads are identical either
way, so a wallclock run's trajectories match the virtual run's exactly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ConfigError, RunManifest, write_kv
from .core import BBox
from .edge.pipeline import EdgePipeline
from .eval.ident import IdScore, idf1_score
from .eval.reports import LatencyTrace
from .server.association import (
    AssociationServer,
    GlobalTrajectory,
    TrajectoryRow,
    trajectory_rows,
    write_trajectory_table,
)
from .server.clm import CameraLink, read_links
from .sim.features import OracleFeatureProvider, StubFeatureProvider
from .sim.render import Dataset
from .wire.channel import SimulatedChannel
from .wire.codec import decode_tracklet_msg, encode_tracklet_msg

_TAG_CHANNEL = 6


@dataclass
class RunResult:
    trajectories: list[GlobalTrajectory]
    rows: list[TrajectoryRow]
    server_stats: dict[str, int]
    channel_stats: dict[str, dict[str, int]]
    edge_stats: dict[str, dict[str, int]]
    trace: Optional[LatencyTrace] = None
    id_score: Optional[IdScore] = None


def build_provider(dataset: Dataset, manifest: RunManifest):
    gt = dataset.ground_truth
    sc = dataset.scenario
    if not manifest.stub_features and gt is not None and gt.boxes:
        return OracleFeatureProvider(
            gt.boxes,
            dim=sc.feature_dim,
            seed=manifest.seed,
            noise=sc.feature_noise,
            camera_bias=sc.camera_bias,
            match_tol_px=max(12.0, 4.0 * sc.det_jitter_px),
        )
    return StubFeatureProvider(dim=sc.feature_dim)


# ---------------------------------------------------------------------------
# phase one: edges


def _edge_worker(
    manifest: RunManifest,
    dataset: Dataset,
    cam_index: int,
    provider,
    trace: Optional[LatencyTrace],
    sink: dict[str, list[tuple[float, bytes]]],
    stats: dict[str, dict[str, int]],
) -> None:
    cam = dataset.cameras[cam_index]
    pipeline = EdgePipeline(cam, manifest.edge_config(), provider, trace)
    by_index = {m.frame_index: m for m in dataset.frames[cam.camera_id]}
    n_frames = dataset.frame_count()
    frame_ms = 1000.0 / dataset.scenario.fps
    emissions: list[tuple[float, bytes]] = []
    for i in range(n_frames):
        ts = i * frame_ms
        for msg in pipeline.process_frame(by_index.get(i), i, ts):
            emissions.append((ts, encode_tracklet_msg(msg)))
    flush_ts = n_frames * frame_ms
    for msg in pipeline.flush(flush_ts):
        emissions.append((flush_ts, encode_tracklet_msg(msg)))
    sink[cam.camera_id] = emissions
    stats[cam.camera_id] = {
        "emitted": len(emissions),
        "queue_peak": pipeline.queue.peak_length,
        "queue_overflow": int(pipeline.queue.overflowed),
    }


def run_edges(
    manifest: RunManifest, dataset: Dataset, provider, threaded: bool,
    with_trace: bool,
) -> tuple[dict[str, list[tuple[float, bytes]]], Optional[LatencyTrace],
           dict[str, dict[str, int]]]:
    cap = manifest.queue_hard_cap
    traces = [LatencyTrace(queue_cap=cap) if with_trace else None
              for _ in dataset.cameras]
    emissions: dict[str, list[tuple[float, bytes]]] = {}
    stats: dict[str, dict[str, int]] = {}
    if threaded:
        threads = [
            threading.Thread(
                target=_edge_worker,
                args=(manifest, dataset, k, provider, traces[k], emissions, stats),
            )
            for k in range(len(dataset.cameras))
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    else:
        for k in range(len(dataset.cameras)):
            _edge_worker(manifest, dataset, k, provider, traces[k], emissions, stats)

    merged: Optional[LatencyTrace] = None
    if with_trace:
        merged = LatencyTrace(queue_cap=cap)
        for t in traces:
            merged.stage_samples.extend(t.stage_samples)
            merged.queue_samples.extend(t.queue_samples)
    return emissions, merged, stats


def run_edges_offline(
    manifest: RunManifest, dataset: Optional[Dataset] = None
) -> dict[str, list]:
    """Per-camera tracklets straight off the edges, skipping channel and server.

    This is the training path: link fitting consumes exactly what the edges
    would ship.
    """
    if dataset is None:
        dataset = Dataset(manifest.data_dir)
    provider = build_provider(dataset, manifest)
    emissions, _, _ = run_edges(manifest, dataset, provider,
                                threaded=False, with_trace=False)
    out: dict[str, list] = {}
    for cam_id in sorted(emissions):
        out[cam_id] = [decode_tracklet_msg(p).to_tracklet()
                       for _, p in emissions[cam_id]]
    return out


# ---------------------------------------------------------------------------
# phase two: channels and server


def _drive_server(
    manifest: RunManifest,
    dataset: Dataset,
    links: dict[tuple[str, str], CameraLink],
    emissions: dict[str, list[tuple[float, bytes]]],
) -> tuple[AssociationServer, dict[str, dict[str, int]]]:
    cam_ids = [c.camera_id for c in dataset.cameras]
    channels = {
        cam_id: SimulatedChannel(
            manifest.channel_config(),
            seed=np.random.SeedSequence([manifest.seed, _TAG_CHANNEL, k]),
        )
        for k, cam_id in enumerate(cam_ids)
    }
    server = AssociationServer(
        links,
        dataset.image_w_by_camera,
        manifest.association_config(),
        manifest.remerge_config(),
        zone_slack_frac=manifest.zone_slack_frac,
    )
    frame_ms = 1000.0 / dataset.scenario.fps
    n_frames = dataset.frame_count()
    cursors = {cam_id: 0 for cam_id in cam_ids}
    for i in range(n_frames + 1):  # one extra tick carries the flush emissions
        ts = i * frame_ms
        for cam_id in cam_ids:
            ems = emissions.get(cam_id, [])
            j = cursors[cam_id]
            while j < len(ems) and ems[j][0] <= ts + 1e-6:
                channels[cam_id].send(ems[j][1], ems[j][0])
                j += 1
            cursors[cam_id] = j
        for cam_id in cam_ids:
            for payload in channels[cam_id].poll(ts):
                server.ingest(payload)
        server.maybe_run_cycles(ts)

    end_ts = n_frames * frame_ms
    deadline = max([end_ts] + [channels[c].drain_deadline_ms() for c in cam_ids])
    for cam_id in cam_ids:
        for payload in channels[cam_id].poll(deadline):
            server.ingest(payload)
    server.finalize(deadline)

    chan_stats = {
        cam_id: {"sent": ch.sent, "dropped": ch.dropped, "delivered": ch.delivered}
        for cam_id, ch in channels.items()
    }
    return server, chan_stats


# ---------------------------------------------------------------------------
# the whole thing


def run(manifest: RunManifest) -> RunResult:
    manifest.validate()
    if not manifest.data_dir:
        raise ConfigError("run needs data_dir")
    dataset = Dataset(manifest.data_dir)
    links: dict[tuple[str, str], CameraLink] = {}
    if manifest.links_path:
        links, _ = read_links(manifest.links_path)
    provider = build_provider(dataset, manifest)

    wallclock = manifest.mode == "wallclock"
    emissions, trace, edge_stats = run_edges(
        manifest, dataset, provider, threaded=wallclock, with_trace=True)
    server, chan_stats = _drive_server(manifest, dataset, links, emissions)

    trajectories = server.trajectories()
    rows = trajectory_rows(trajectories)
    id_score: Optional[IdScore] = None
    gt = dataset.ground_truth
    if gt is not None and gt.boxes:
        gt_rows = [(b.camera_id, b.frame_index, b.vehicle_id, b.bbox) for b in gt.boxes]
        pred_rows = [(r.camera_id, r.frame_index, r.global_id, BBox(r.x, r.y, r.w, r.h))
                     for r in rows]
        id_score = idf1_score(gt_rows, pred_rows, iou_threshold=manifest.eval_iou)
    result = RunResult(
        trajectories=trajectories,
        rows=rows,
        server_stats=dict(server.stats),
        channel_stats=chan_stats,
        edge_stats=edge_stats,
        trace=trace,
        id_score=id_score,
    )
    if manifest.out_dir:
        save_result(manifest.out_dir, result)
    return result


def save_result(out_dir: str | Path, result: RunResult) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_table(out / "trajectories.txt", result.rows)
    stats: dict[str, float] = {"trajectories": len(result.trajectories)}
    for k, v in result.server_stats.items():
        stats[f"server_{k}"] = v
    for cam_id in sorted(result.channel_stats):
        for k, v in result.channel_stats[cam_id].items():
            stats[f"channel_{cam_id}_{k}"] = v
    for cam_id in sorted(result.edge_stats):
        for k, v in result.edge_stats[cam_id].items():
            stats[f"edge_{cam_id}_{k}"] = v
    if result.id_score is not None:
        stats["idf1"] = result.id_score.idf1
        stats["idp"] = result.id_score.idp
        stats["idr"] = result.id_score.idr
    write_kv(out / "run_stats.txt", stats, header="run counters")
    if result.trace is not None:
        result.trace.save(out / "trace.txt")
