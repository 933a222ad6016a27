"""FIFO feature-extraction scheduler with a load-adaptive subsample divisor.

Completed tracklets queue up for feature extraction. A dequeued tracklet is
subsampled to every ``k``-th observation (indices 0, k, 2k, ... - never
fewer than one frame), which caps how much pixel work the feature provider
does per tracklet. After each dequeue, ``k`` reacts to the backlog left in
the queue: one step up when it exceeds the queue threshold, one step down
otherwise, clamped to the configured bounds. Deep backlogs therefore thin
the sampling to catch up; an idle queue drifts back toward dense sampling.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from ..config import SchedulerConfig
from ..core import Observation, Tracklet, aggregate_features


class FeatureProvider(Protocol):
    """Anything that can embed the frames behind a tracklet's observations."""

    def extract(self, camera_id: str, observations: Sequence[Observation]) -> np.ndarray:
        """Return one feature row per observation, shape (len(observations), dim)."""
        ...


@dataclass(frozen=True)
class FeatureTask:
    tracklet: Tracklet
    indices: tuple[int, ...]   # observation indices selected for extraction

    @property
    def sampled(self) -> tuple[Observation, ...]:
        return tuple(self.tracklet.observations[i] for i in self.indices)


class FeatureQueue:
    def __init__(self, cfg: SchedulerConfig):
        cfg.validate()
        self.cfg = cfg
        self.k = cfg.subsample_init
        self._queue: deque[Tracklet] = deque()
        self.overflowed = False
        self.peak_length = 0

    def __len__(self) -> int:
        return len(self._queue)

    def enqueue(self, tracklet: Tracklet) -> None:
        self._queue.append(tracklet)
        self.peak_length = max(self.peak_length, len(self._queue))
        if len(self._queue) > self.cfg.hard_cap:
            self.overflowed = True

    def dequeue(self) -> Optional[FeatureTask]:
        """Pop the oldest tracklet and pick its sample frames; None when idle.

        The divisor adjusts after the pop, driven by what is still queued.
        """
        if not self._queue:
            return None
        tracklet = self._queue.popleft()
        indices = tuple(range(0, len(tracklet.observations), self.k))
        backlog = len(self._queue)
        if backlog > self.cfg.queue_threshold:
            self.k = min(self.k + 1, self.cfg.subsample_max)
        elif backlog < self.cfg.queue_threshold:
            self.k = max(self.k - 1, self.cfg.subsample_min)
        return FeatureTask(tracklet=tracklet, indices=indices)


def extract_and_attach(task: FeatureTask, provider: FeatureProvider) -> Tracklet:
    """Run the provider on the sampled frames and attach the aggregate.

    The per-frame features are combined by confidence-weighted sum and
    L2-normalized, so hesitant detections contribute less to the tracklet's
    appearance than confident ones.
    """
    sampled = task.sampled
    feats = np.asarray(provider.extract(task.tracklet.camera_id, sampled), dtype=np.float64)
    if feats.shape[0] != len(sampled):
        raise ValueError(
            f"provider returned {feats.shape[0]} features for {len(sampled)} observations"
        )
    confidences = np.array([o.confidence for o in sampled], dtype=np.float64)
    return task.tracklet.with_feature(aggregate_features(feats, confidences))
