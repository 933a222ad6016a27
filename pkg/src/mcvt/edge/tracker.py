"""Single-camera tracking-by-detection with a two-stage matching cascade.

Per step: predict every open track, greedily match high-confidence
detections by IoU, then give the leftover tracks a second chance against
the low-confidence detections. Leftover high-confidence detections above
the spawn threshold start tentative tracks; a tentative track must hit on
consecutive steps to be confirmed and is discarded the moment it misses.
Confirmed tracks that go unmatched for more than ``max_age`` steps close
and their history is emitted as a tracklet.

Matching is deterministic: candidate pairs are visited by descending IoU,
ties broken by detection confidence (desc), then detection index, then
track age order.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Optional, Sequence

from ..config import TrackerConfig
from ..core import BBox, Detection, Observation, Tracklet, iou
from .kalman import BoxKalman, state_to_bbox


class TrackState(IntEnum):
    TENTATIVE = 0
    CONFIRMED = 1


class Track:
    """One open track: filter state plus its recorded observations."""

    def __init__(self, track_id: int, det: Detection, kf: BoxKalman, confirm_hits: int):
        self.track_id = track_id
        self.kf = kf
        self.mean, self.cov = kf.initiate(det.bbox)
        self.state = TrackState.CONFIRMED if confirm_hits <= 1 else TrackState.TENTATIVE
        self.hits = 1
        self.frames_since_update = 0
        self._confirm_hits = confirm_hits
        self.history: list[Observation] = [self._observe(det)]

    @staticmethod
    def _observe(det: Detection) -> Observation:
        return Observation(det.frame_index, det.timestamp_ms, det.bbox, det.confidence)

    def predict(self) -> None:
        self.mean, self.cov = self.kf.predict(self.mean, self.cov)

    @property
    def predicted_bbox(self) -> BBox:
        return state_to_bbox(self.mean)

    def update(self, det: Detection) -> None:
        self.mean, self.cov = self.kf.update(self.mean, self.cov, det.bbox)
        self.history.append(self._observe(det))
        self.hits += 1
        self.frames_since_update = 0
        if self.state == TrackState.TENTATIVE and self.hits >= self._confirm_hits:
            self.state = TrackState.CONFIRMED

    def mark_missed(self) -> None:
        self.frames_since_update += 1

    def to_tracklet(self, camera_id: str) -> Tracklet:
        return Tracklet(camera_id, self.track_id, tuple(self.history))


def _greedy_iou_match(
    tracks: Sequence[Track],
    dets: Sequence[tuple[int, Detection]],
    min_iou: float,
) -> tuple[list[tuple[Track, Detection]], list[Track], list[tuple[int, Detection]]]:
    """Greedy descending-IoU matching; returns (pairs, leftover tracks, leftover dets)."""
    candidates = []
    for ti, track in enumerate(tracks):
        pb = track.predicted_bbox
        for di, (orig_idx, det) in enumerate(dets):
            overlap = iou(pb, det.bbox)
            if overlap >= min_iou:
                candidates.append((-overlap, -det.confidence, orig_idx, ti, di))
    candidates.sort()
    used_t: set[int] = set()
    used_d: set[int] = set()
    pairs = []
    for _, _, _, ti, di in candidates:
        if ti in used_t or di in used_d:
            continue
        used_t.add(ti)
        used_d.add(di)
        pairs.append((tracks[ti], dets[di][1]))
    rest_tracks = [t for i, t in enumerate(tracks) if i not in used_t]
    rest_dets = [d for i, d in enumerate(dets) if i not in used_d]
    return pairs, rest_tracks, rest_dets


class SingleCameraTracker:
    def __init__(self, camera_id: str, cfg: TrackerConfig, kf: Optional[BoxKalman] = None):
        self.camera_id = camera_id
        self.cfg = cfg
        self.kf = kf or BoxKalman()
        self.tracks: list[Track] = []
        self._next_id = 1

    def step(self, detections: Sequence[Detection], frame_index: int) -> list[Tracklet]:
        """Advance one frame; returns tracklets of tracks that closed this step.

        ``detections`` should already be filtered. The tracker ages by step,
        so call it every frame (with an empty list when there is nothing).
        """
        del frame_index  # detections carry their own stamps; steps do the aging
        for t in self.tracks:
            t.predict()

        high = [(i, d) for i, d in enumerate(detections)
                if d.confidence >= self.cfg.high_threshold]
        low = [(i, d) for i, d in enumerate(detections)
               if self.cfg.low_threshold <= d.confidence < self.cfg.high_threshold]

        matched, rest_tracks, rest_high = _greedy_iou_match(
            self.tracks, high, self.cfg.first_match_iou)
        matched2, rest_tracks, _ = _greedy_iou_match(
            rest_tracks, low, self.cfg.second_match_iou)

        for track, det in matched + matched2:
            track.update(det)

        closed: list[Tracklet] = []
        survivors = [t for t, _ in matched + matched2]
        for track in rest_tracks:
            if track.state == TrackState.TENTATIVE:
                continue  # a tentative track dies silently on its first miss
            track.mark_missed()
            if track.frames_since_update > self.cfg.max_age:
                closed.append(track.to_tracklet(self.camera_id))
            else:
                survivors.append(track)

        for _, det in rest_high:
            if det.confidence >= self.cfg.new_track_threshold:
                survivors.append(Track(self._next_id, det, self.kf, self.cfg.confirm_hits))
                self._next_id += 1

        # keep a stable, id-ordered roster so matching order never drifts
        survivors.sort(key=lambda t: t.track_id)
        self.tracks = survivors
        return closed

    def flush(self) -> list[Tracklet]:
        """Close every confirmed track (end of stream)."""
        out = [t.to_tracklet(self.camera_id)
               for t in self.tracks if t.state == TrackState.CONFIRMED]
        self.tracks = []
        return out
