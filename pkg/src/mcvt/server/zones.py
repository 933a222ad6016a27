"""Entry/exit zone discovery.

A camera's entry zone(s) cluster the first box centers of its tracklets;
exit zone(s) cluster the last box centers. Clustering is plain
density-based labeling: a point is a core point when its eps-ball holds at
least ``min_pts`` points (itself included), clusters grow over core points,
border points join the first cluster that reaches them, and everything
else is noise and discarded. The O(n^2) neighbor scan is fine at the point
counts a camera produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..config import ZoneConfig
from ..core import Tracklet


def dbscan_labels(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Deterministic density clustering; returns labels, -1 for noise."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels
    diff = pts[:, None, :] - pts[None, :, :]
    within = (diff * diff).sum(axis=2) <= eps * eps
    neighbor_count = within.sum(axis=1)
    core = neighbor_count >= min_pts
    cluster = 0
    for seed in range(n):
        if labels[seed] != -1 or not core[seed]:
            continue
        labels[seed] = cluster
        frontier = [seed]
        while frontier:
            p = frontier.pop()
            for q in np.flatnonzero(within[p]):
                if labels[q] == -1:
                    labels[q] = cluster
                    if core[q]:
                        frontier.append(int(q))
        cluster += 1
    return labels


@dataclass(frozen=True)
class Zone:
    """A compact image region where tracklets start or end."""

    camera_id: str
    kind: str            # "entry" or "exit"
    cx: float
    cy: float
    radius: float
    count: int           # member points behind the fit

    def contains(self, x: float, y: float, slack: float = 0.0) -> bool:
        return math.hypot(x - self.cx, y - self.cy) <= self.radius + slack

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)


def cluster_zones(
    camera_id: str,
    kind: str,
    points: np.ndarray | Sequence[tuple[float, float]],
    image_w: float,
    cfg: ZoneConfig,
) -> list[Zone]:
    """Cluster endpoint pixels into zones; noise points are dropped.

    Zones come back sorted by centroid (x, then y) so indices are stable.
    """
    if kind not in ("entry", "exit"):
        raise ValueError(f"zone kind must be 'entry' or 'exit', got {kind!r}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    labels = dbscan_labels(pts, eps=cfg.eps_frac * image_w, min_pts=cfg.min_pts)
    zones = []
    for lab in sorted(set(labels[labels >= 0])):
        members = pts[labels == lab]
        centroid = members.mean(axis=0)
        radius = float(np.sqrt(((members - centroid) ** 2).sum(axis=1)).max())
        zones.append(Zone(
            camera_id=camera_id,
            kind=kind,
            cx=float(centroid[0]),
            cy=float(centroid[1]),
            radius=radius,
            count=int(len(members)),
        ))
    zones.sort(key=lambda z: (z.cx, z.cy))
    return zones


def tracklet_entry_points(tracklets: Sequence[Tracklet]) -> np.ndarray:
    return np.array([t.first_center for t in tracklets], dtype=np.float64).reshape(-1, 2)


def tracklet_exit_points(tracklets: Sequence[Tracklet]) -> np.ndarray:
    return np.array([t.last_center for t in tracklets], dtype=np.float64).reshape(-1, 2)
