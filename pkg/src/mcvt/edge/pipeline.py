"""One camera's edge stack, frame in / tracklet messages out:

    activity gate -> detection filter -> tracker -> geo-mapping
        -> feature scheduler -> outgoing messages

An inactive gate verdict drops the frame's detections, but the tracker and
the scheduler still tick every frame so open tracks age out and queued work
keeps draining. Each stage is wall-timed; pass a trace recorder to collect
the numbers.
"""

from __future__ import annotations

import time
from dataclasses import replace
from typing import Optional, Protocol, Sequence

from ..config import EdgeConfig
from ..core import Detection, Tracklet
from ..wire.codec import FrameMsg, TrackletMsg
from .filtering import filter_detections
from .gate import MotionGate
from .geomap import CameraModel, geo_map
from .scheduler import FeatureProvider, FeatureQueue, extract_and_attach
from .tracker import SingleCameraTracker

STAGES = ("gate", "filter", "track", "geomap", "feature")


class TraceRecorder(Protocol):
    def add_stage(self, camera_id: str, frame_index: int, stage: str, ms: float) -> None: ...
    def add_queue(self, camera_id: str, frame_index: int, length: int) -> None: ...


class EdgePipeline:
    def __init__(
        self,
        cam: CameraModel,
        cfg: EdgeConfig,
        provider: FeatureProvider,
        trace: Optional[TraceRecorder] = None,
    ):
        self.cam = cam
        self.cfg = cfg
        self.provider = provider
        self.trace = trace
        self.gate = MotionGate(cfg.gate)
        self.tracker = SingleCameraTracker(cam.camera_id, cfg.tracker)
        self.queue = FeatureQueue(cfg.scheduler)

    # -- helpers -----------------------------------------------------------

    def _geo_tag(self, tracklet: Tracklet) -> Tracklet:
        tagged = []
        for o in tracklet.observations:
            try:
                gps = geo_map(self.cam, (o.bbox.cx, o.bbox.cy), self.cfg.mapping_height_m)
            except ValueError:
                gps = None
            tagged.append(replace(o, gps=gps))
        return replace(tracklet, observations=tuple(tagged))

    def _service(self, now_ms: float, budget: int) -> list[TrackletMsg]:
        out = []
        for _ in range(budget):
            task = self.queue.dequeue()
            if task is None:
                break
            done = extract_and_attach(task, self.provider)
            out.append(TrackletMsg.from_tracklet(done, emitted_at_ms=now_ms))
        return out

    # -- per-frame ----------------------------------------------------------

    def process_frame(
        self, frame: Optional[FrameMsg], frame_index: int, timestamp_ms: float
    ) -> list[TrackletMsg]:
        """Advance one frame tick. ``frame=None`` means the frame never arrived."""
        t0 = time.perf_counter()
        active = True
        if frame is not None and self.cfg.gate_enabled:
            _, active = self.gate.update(frame.grid)
        t1 = time.perf_counter()

        dets: Sequence[Detection] = ()
        if frame is not None and active:
            dets = [
                Detection(self.cam.camera_id, frame.frame_index, frame.timestamp_ms,
                          bbox, conf, class_id)
                for bbox, conf, class_id in frame.detections
            ]
            dets = filter_detections(dets, self.cfg.det_filter)
        t2 = time.perf_counter()

        closed = self.tracker.step(dets, frame_index)
        t3 = time.perf_counter()

        peak = len(self.queue)
        for tracklet in closed:
            self.queue.enqueue(self._geo_tag(tracklet))
            peak = max(peak, len(self.queue))
        t4 = time.perf_counter()

        msgs = self._service(timestamp_ms, self.cfg.scheduler.tasks_per_tick)
        t5 = time.perf_counter()

        if self.trace is not None:
            cam = self.cam.camera_id
            for stage, a, b in zip(STAGES, (t0, t1, t2, t3, t4), (t1, t2, t3, t4, t5)):
                self.trace.add_stage(cam, frame_index, stage, (b - a) * 1000.0)
            self.trace.add_queue(cam, frame_index, peak)
        return msgs

    def flush(self, timestamp_ms: float) -> list[TrackletMsg]:
        """Close every open track and drain the feature queue completely."""
        for tracklet in self.tracker.flush():
            self.queue.enqueue(self._geo_tag(tracklet))
        out = []
        while True:
            batch = self._service(timestamp_ms, 64)
            if not batch:
                return out
            out.extend(batch)
