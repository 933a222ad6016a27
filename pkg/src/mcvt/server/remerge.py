"""Single-camera re-merge: reconnect tracklet fragments the tracker split.

Two same-camera tracklets A then B are merge candidates when

* B starts after A ends, with a gap under the time threshold,
* B's first box center sits near A's last box center (distance as a
  fraction of image width), and
* their appearance features agree (cosine distance under the threshold).

Candidates merge greedily in ascending gap order; each tracklet takes part
in at most one merge per pass, and passes repeat until nothing merges, so
chains A-B-C collapse transitively. The merged tracklet keeps the earlier
id, concatenates observations, and re-aggregates the feature as the
confidence-mass-weighted blend of the two unit features.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from ..config import RemergeConfig
from ..core import Tracklet, cosine_similarity, l2_normalize


def _mergeable(a: Tracklet, b: Tracklet, cfg: RemergeConfig, image_w: float) -> Optional[float]:
    """Gap in ms when (a, b) qualify, else None."""
    gap_ms = b.start_ms - a.end_ms
    if not (0.0 < gap_ms < cfg.max_gap_s * 1000.0):
        return None
    ax, ay = a.last_center
    bx, by = b.first_center
    if math.hypot(bx - ax, by - ay) / image_w >= cfg.max_center_dist_frac:
        return None
    if a.feature is None or b.feature is None:
        return None
    if 1.0 - cosine_similarity(a.feature, b.feature) >= cfg.max_feature_dist:
        return None
    return gap_ms


def merge_pair(a: Tracklet, b: Tracklet) -> Tracklet:
    if a.camera_id != b.camera_id:
        raise ValueError("re-merge only joins tracklets from one camera")
    feature = a.feature
    if a.feature is not None and b.feature is not None:
        wa = sum(o.confidence for o in a.observations)
        wb = sum(o.confidence for o in b.observations)
        feature = l2_normalize(wa * np.asarray(a.feature) + wb * np.asarray(b.feature))
    return replace(a, observations=a.observations + b.observations, feature=feature)


def remerge(
    tracklets: Sequence[Tracklet],
    cfg: RemergeConfig,
    image_w: float,
) -> tuple[list[Tracklet], list[tuple[int, int]]]:
    """Merge fragments to fixpoint.

    Returns the surviving tracklets plus the merge lineage as
    ``(kept_track_id, absorbed_track_id)`` events, so callers can keep any
    external identity bookkeeping in sync.
    """
    work = sorted(tracklets, key=lambda t: (t.start_ms, t.track_id))
    events: list[tuple[int, int]] = []
    while True:
        candidates = []
        for i, a in enumerate(work):
            for j, b in enumerate(work):
                if i == j:
                    continue
                gap = _mergeable(a, b, cfg, image_w)
                if gap is not None:
                    candidates.append((gap, a.track_id, b.track_id, i, j))
        if not candidates:
            return work, events
        candidates.sort()
        used: set[int] = set()
        merges: list[tuple[int, int]] = []
        for _, _, _, i, j in candidates:
            if i in used or j in used:
                continue
            used.update((i, j))
            merges.append((i, j))
        if not merges:
            return work, events
        replacement: dict[int, Tracklet] = {}
        absorbed: set[int] = set()
        for i, j in merges:
            replacement[i] = merge_pair(work[i], work[j])
            absorbed.add(j)
            events.append((work[i].track_id, work[j].track_id))
        work = sorted(
            (replacement.get(idx, t) for idx, t in enumerate(work) if idx not in absorbed),
            key=lambda t: (t.start_ms, t.track_id),
        )
