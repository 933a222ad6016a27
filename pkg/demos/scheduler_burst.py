"""
Adaptive feature scheduling under a burst
=========================================

Completed tracklets queue up for feature extraction. When the backlog
grows past the threshold, the subsampling divisor K rises so each task
touches fewer frames; when it drains, K relaxes back down. A burst of
completions never overflows the queue, it just gets sampled coarser.
"""

from mcvt.config import SchedulerConfig
from mcvt.core import BBox, Observation, Tracklet
from mcvt.edge.scheduler import FeatureQueue

cfg = SchedulerConfig(subsample_init=5, queue_threshold=10, hard_cap=100)
queue = FeatureQueue(cfg)

obs = tuple(Observation(i, i * 66.7, BBox(0.0, 0.0, 10.0, 10.0), 1.0, None)
            for i in range(60))
for tid in range(30):
    queue.enqueue(Tracklet("cam00", tid, obs, None))
print(f"burst of 30 tracklets queued, overflow={queue.overflowed}")

print(f"{'dequeue':>7} {'backlog':>7} {'K':>3} {'frames sampled':>14}")
step = 0
while (task := queue.dequeue()) is not None:
    step += 1
    if step <= 6 or step % 6 == 0 or len(queue) == 0:
        print(f"{step:7d} {len(queue):7d} {queue.k:3d} {len(task.indices):14d}")

# K climbed while the backlog was deep, then eased off as it drained
print(f"drained, K back to {queue.k}, overflow={queue.overflowed}")
