"""Cross-camera association: turn per-camera tracklets into global identities.

The server buffers incoming tracklets for a sliding horizon and wakes up on
a fixed cycle. Each cycle it first heals same-camera fragmentation, then
scores every link-gated (exit tracklet, entry tracklet) pair with a cost
that rewards both appearance similarity and an arrival time the fitted
travel-time density considers plausible:

    cost = appearance_weight * (1 - cos) - temporal_weight * density(dt)

Matches are taken greedily from the global minimum upward while the cost
stays under the match threshold. Matched pairs land in a union-find, so a
vehicle crossing many cameras chains into one component. Tracklets aging
out of the horizon are evicted and their component receives a global id,
never revoked and never split.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Optional, Sequence

import numpy as np

from ..config import AssociationConfig, RemergeConfig
from ..core import Tracklet, cosine_similarity
from ..wire.codec import TrackletMsg, decode_tracklet_msg
from .clm import CameraLink, TransitionKde, gate_candidates
from .remerge import remerge


# ---------------------------------------------------------------------------
# pairwise cost and matching


def pair_cost(
    feature_a: np.ndarray,
    feature_b: np.ndarray,
    kde: TransitionKde,
    dt_s: float,
    appearance_weight: float,
    temporal_weight: float,
) -> float:
    """Lower is better; a plausible travel time subtracts from the cost."""
    appearance = 1.0 - cosine_similarity(feature_a, feature_b)
    return appearance_weight * appearance - temporal_weight * float(kde.evaluate(dt_s))


def build_cost_matrix(
    exits: Sequence[Tracklet],
    entries: Sequence[Tracklet],
    link: CameraLink,
    cfg: AssociationConfig,
    slack_px: float = 0.0,
) -> np.ndarray:
    """Dense cost matrix with +inf wherever the link gate rejects the pair."""
    cost = np.full((len(exits), len(entries)), np.inf)
    if cost.size == 0:
        return cost
    pairs = [(a, b) for a in exits for b in entries]
    mask = gate_candidates(link, pairs, slack_px=slack_px)
    k = 0
    for i, a in enumerate(exits):
        for j, b in enumerate(entries):
            if mask[k] and a.feature is not None and b.feature is not None:
                dt_s = (b.start_ms - a.end_ms) / 1000.0
                cost[i, j] = pair_cost(
                    a.feature, b.feature, link.kde, dt_s,
                    cfg.appearance_weight, cfg.temporal_weight,
                )
            k += 1
    return cost


def greedy_match(cost: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """Repeatedly take the cheapest remaining (row, col) while cost <= threshold.

    Exact ties resolve to the smallest row, then the smallest column. Each
    match removes its row and column from further consideration.
    """
    c = np.array(cost, dtype=np.float64, copy=True)
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
    if np.isnan(c).any():
        raise ValueError("cost matrix contains NaN")
    pairs: list[tuple[int, int]] = []
    if c.size == 0:
        return pairs
    while True:
        flat = int(np.argmin(c))  # row-major argmin matches the (row, col) tie-break
        r, col = divmod(flat, c.shape[1])
        # +inf marks a gated-out pair; it can never match, whatever the threshold
        if not np.isfinite(c[r, col]) or not c[r, col] <= threshold:
            return pairs
        pairs.append((r, col))
        c[r, :] = np.inf
        c[:, col] = np.inf


# ---------------------------------------------------------------------------
# identity bookkeeping


class UnionFind:
    """Disjoint sets over hashable keys; the earliest-added key anchors its set."""

    def __init__(self) -> None:
        self._parent: dict[Hashable, Hashable] = {}
        self._order: dict[Hashable, int] = {}

    def __len__(self) -> int:
        return len(self._parent)

    def __contains__(self, key: Hashable) -> bool:
        return key in self._parent

    def add(self, key: Hashable) -> None:
        if key not in self._parent:
            self._parent[key] = key
            self._order[key] = len(self._order)

    def find(self, key: Hashable) -> Hashable:
        if key not in self._parent:
            raise KeyError(f"unknown key: {key!r}")
        root = key
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[key] != root:  # path compression
            self._parent[key], key = root, self._parent[key]
        return root

    def union(self, a: Hashable, b: Hashable) -> Hashable:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self._order[rb] < self._order[ra]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        return ra

    def connected(self, a: Hashable, b: Hashable) -> bool:
        return self.find(a) == self.find(b)

    def groups(self) -> list[list]:
        by_root: dict[Hashable, list] = {}
        for key in self._parent:
            by_root.setdefault(self.find(key), []).append(key)
        roots = sorted(by_root, key=lambda r: self._order[r])
        return [sorted(by_root[r]) for r in roots]


@dataclass(frozen=True)
class GlobalTrajectory:
    global_id: int
    tracklets: tuple[Tracklet, ...]

    @property
    def cameras(self) -> tuple[str, ...]:
        return tuple(sorted({t.camera_id for t in self.tracklets}))

    @property
    def start_ms(self) -> float:
        return min(t.start_ms for t in self.tracklets)

    @property
    def end_ms(self) -> float:
        return max(t.end_ms for t in self.tracklets)


# ---------------------------------------------------------------------------
# the server


class AssociationServer:
    """Buffers tracklets, runs periodic association cycles, emits global ids.

    Ids are assigned when a tracklet's component first loses a member to
    eviction, in (end time, camera, track id) order, so replays with the
    same inputs number identities identically.
    """

    def __init__(
        self,
        links: dict[tuple[str, str], CameraLink],
        image_w_by_camera: dict[str, float],
        cfg: AssociationConfig,
        remerge_cfg: Optional[RemergeConfig] = None,
        zone_slack_frac: float = 0.05,
    ) -> None:
        cfg.validate()
        for cam_i, cam_j in links:
            for cam in (cam_i, cam_j):
                if cam not in image_w_by_camera:
                    raise ValueError(f"link references unknown camera {cam!r}")
        self._links = dict(links)
        self._image_w = dict(image_w_by_camera)
        self._cfg = cfg
        self._remerge_cfg = remerge_cfg
        self._slack_frac = zone_slack_frac
        self._buffer: dict[str, dict[int, Tracklet]] = {cam: {} for cam in image_w_by_camera}
        self._uf = UnionFind()
        self._gid_by_root: dict[Hashable, int] = {}
        self._next_gid = 0
        self._archive: list[tuple[tuple[str, int], Tracklet]] = []
        self._period_ms = cfg.cycle_period_s * 1000.0
        self._next_cycle_ms = self._period_ms
        self.stats: dict[str, int] = {
            "ingested": 0, "cycles": 0, "remerges": 0, "matches": 0, "evicted": 0,
        }

    # -- intake

    def ingest(self, payload: bytes) -> TrackletMsg:
        msg = decode_tracklet_msg(payload)
        self.ingest_tracklet(msg.to_tracklet())
        return msg

    def ingest_tracklet(self, tracklet: Tracklet) -> None:
        if tracklet.camera_id not in self._buffer:
            raise ValueError(f"tracklet from undeclared camera {tracklet.camera_id!r}")
        key = (tracklet.camera_id, tracklet.track_id)
        self._uf.add(key)
        self._buffer[tracklet.camera_id][tracklet.track_id] = tracklet
        self.stats["ingested"] += 1

    @property
    def buffered_count(self) -> int:
        return sum(len(d) for d in self._buffer.values())

    # -- cycles

    def maybe_run_cycles(self, now_ms: float) -> int:
        """Run every cycle whose boundary has passed; returns how many ran."""
        ran = 0
        while self._next_cycle_ms <= now_ms:
            self.run_cycle(self._next_cycle_ms)
            self._next_cycle_ms += self._period_ms
            ran += 1
        return ran

    def run_cycle(self, now_ms: float) -> None:
        self.stats["cycles"] += 1
        if self._remerge_cfg is not None and self._remerge_cfg.enabled:
            for cam in sorted(self._buffer):
                if len(self._buffer[cam]) < 2:
                    continue
                merged, events = remerge(
                    list(self._buffer[cam].values()), self._remerge_cfg, self._image_w[cam])
                for kept_id, absorbed_id in events:
                    self._union((cam, kept_id), (cam, absorbed_id))
                    self.stats["remerges"] += 1
                self._buffer[cam] = {t.track_id: t for t in merged}
        for cam_i, cam_j in sorted(self._links):
            link = self._links[(cam_i, cam_j)]
            exits = sorted(self._buffer.get(cam_i, {}).values(), key=lambda t: t.track_id)
            entries = sorted(self._buffer.get(cam_j, {}).values(), key=lambda t: t.track_id)
            if not exits or not entries:
                continue
            slack_px = self._slack_frac * self._image_w[cam_i]
            cost = build_cost_matrix(exits, entries, link, self._cfg, slack_px=slack_px)
            for r, c in greedy_match(cost, self._cfg.match_threshold):
                self._union((cam_i, exits[r].track_id), (cam_j, entries[c].track_id))
                self.stats["matches"] += 1
        self._evict(now_ms - self._cfg.buffer_horizon_s * 1000.0)

    def finalize(self, now_ms: float) -> list[GlobalTrajectory]:
        """One last cycle, then flush the buffer and return all trajectories."""
        self.run_cycle(now_ms)
        self._evict(None)
        return self.trajectories()

    # -- internals

    def _union(self, key_a: tuple[str, int], key_b: tuple[str, int]) -> None:
        ra, rb = self._uf.find(key_a), self._uf.find(key_b)
        if ra == rb:
            return
        ga = self._gid_by_root.pop(ra, None)
        gb = self._gid_by_root.pop(rb, None)
        root = self._uf.union(key_a, key_b)
        live = [g for g in (ga, gb) if g is not None]
        if live:
            self._gid_by_root[root] = min(live)

    def _evict(self, cutoff_ms: Optional[float]) -> None:
        doomed: list[tuple[float, str, int, Tracklet]] = []
        for cam in sorted(self._buffer):
            for tid, t in self._buffer[cam].items():
                if cutoff_ms is None or t.end_ms < cutoff_ms:
                    doomed.append((t.end_ms, cam, tid, t))
        doomed.sort(key=lambda row: (row[0], row[1], row[2]))
        for end_ms, cam, tid, t in doomed:
            del self._buffer[cam][tid]
            root = self._uf.find((cam, tid))
            if root not in self._gid_by_root:
                self._gid_by_root[root] = self._next_gid
                self._next_gid += 1
            self._archive.append(((cam, tid), t))
            self.stats["evicted"] += 1

    def trajectories(self) -> list[GlobalTrajectory]:
        """Evicted tracklets grouped by global id. Complete after finalize()."""
        by_gid: dict[int, list[Tracklet]] = {}
        for key, t in self._archive:
            gid = self._gid_by_root[self._uf.find(key)]
            by_gid.setdefault(gid, []).append(t)
        out = []
        for gid in sorted(by_gid):
            ts = sorted(by_gid[gid], key=lambda t: (t.start_ms, t.camera_id, t.track_id))
            out.append(GlobalTrajectory(global_id=gid, tracklets=tuple(ts)))
        return out


# ---------------------------------------------------------------------------
# output table
#
# One line per observation:
#   global_id camera_id track_id frame_index x y w h lat lon
# with "-" standing in for lat/lon when no geo fix exists.


@dataclass(frozen=True)
class TrajectoryRow:
    global_id: int
    camera_id: str
    track_id: int
    frame_index: int
    x: float
    y: float
    w: float
    h: float
    lat: Optional[float] = None
    lon: Optional[float] = None


def trajectory_rows(trajectories: Sequence[GlobalTrajectory]) -> list[TrajectoryRow]:
    rows = []
    for traj in trajectories:
        for t in traj.tracklets:
            for o in t.observations:
                rows.append(TrajectoryRow(
                    global_id=traj.global_id,
                    camera_id=t.camera_id,
                    track_id=t.track_id,
                    frame_index=o.frame_index,
                    x=o.bbox.x, y=o.bbox.y, w=o.bbox.w, h=o.bbox.h,
                    lat=o.gps.lat if o.gps is not None else None,
                    lon=o.gps.lon if o.gps is not None else None,
                ))
    return rows


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_trajectory_table(path: str | Path, rows: Sequence[TrajectoryRow]) -> None:
    lines = ["# global_id camera_id track_id frame_index x y w h lat lon"]
    for r in rows:
        lat = _fmt(r.lat) if r.lat is not None else "-"
        lon = _fmt(r.lon) if r.lon is not None else "-"
        lines.append(
            f"{r.global_id} {r.camera_id} {r.track_id} {r.frame_index} "
            f"{_fmt(r.x)} {_fmt(r.y)} {_fmt(r.w)} {_fmt(r.h)} {lat} {lon}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_table(path: str | Path) -> list[TrajectoryRow]:
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 10:
            raise ValueError(f"{path}:{lineno}: expected 10 fields, got {len(toks)}")
        try:
            rows.append(TrajectoryRow(
                global_id=int(toks[0]), camera_id=toks[1], track_id=int(toks[2]),
                frame_index=int(toks[3]),
                x=float(toks[4]), y=float(toks[5]), w=float(toks[6]), h=float(toks[7]),
                lat=None if toks[8] == "-" else float(toks[8]),
                lon=None if toks[9] == "-" else float(toks[9]),
            ))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return rows
