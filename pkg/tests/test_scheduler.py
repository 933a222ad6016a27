import numpy as np
import pytest

from mcvt.config import ConfigError, SchedulerConfig
from mcvt.core import BBox, Observation, Tracklet
from mcvt.edge.scheduler import FeatureQueue, extract_and_attach


def tracklet(n_obs, track_id=1, conf=1.0):
    obs = tuple(
        Observation(i, i * 66.7, BBox(float(i), 0, 10, 10), conf) for i in range(n_obs)
    )
    return Tracklet("cam00", track_id, obs)


def test_fifo_order_preserved():
    q = FeatureQueue(SchedulerConfig())
    for tid in range(1000):
        q.enqueue(tracklet(3, track_id=tid))
    assert len(q) == 1000
    for tid in range(1000):
        task = q.dequeue()
        assert task.tracklet.track_id == tid
    assert q.dequeue() is None


def test_subsample_every_kth_frame():
    # 20 observations at K=5 -> frames 0, 5, 10, 15
    q = FeatureQueue(SchedulerConfig(subsample_init=5))
    q.enqueue(tracklet(20))
    task = q.dequeue()
    assert task.indices == (0, 5, 10, 15)
    assert [o.frame_index for o in task.sampled] == [0, 5, 10, 15]


def test_short_tracklet_keeps_at_least_one_frame():
    q = FeatureQueue(SchedulerConfig(subsample_init=5))
    q.enqueue(tracklet(3))
    assert q.dequeue().indices == (0,)


def test_k_raises_on_backlog():
    q = FeatureQueue(SchedulerConfig(subsample_init=5, queue_threshold=10))
    for tid in range(12):
        q.enqueue(tracklet(2, track_id=tid))
    q.dequeue()  # 11 left, above T
    assert q.k == 6


def test_k_holds_at_threshold():
    q = FeatureQueue(SchedulerConfig(subsample_init=5, queue_threshold=10))
    for tid in range(11):
        q.enqueue(tracklet(2, track_id=tid))
    q.dequeue()  # exactly T left
    assert q.k == 5


def test_k_decays_when_idle_and_clamps():
    q = FeatureQueue(SchedulerConfig(subsample_init=2, queue_threshold=10))
    for tid in range(3):
        q.enqueue(tracklet(2, track_id=tid))
    q.dequeue()
    assert q.k == 1
    q.dequeue()
    assert q.k == 1  # lower clamp


def test_k_upper_clamp():
    cfg = SchedulerConfig(subsample_init=14, subsample_max=15, queue_threshold=0)
    q = FeatureQueue(cfg)
    for tid in range(5):
        q.enqueue(tracklet(2, track_id=tid))
    q.dequeue()
    q.dequeue()
    assert q.k == 15


def test_growing_backlog_reaches_k_max_quickly():
    """A queue that stays above T drives K to K_max in K_max - K_min steps."""
    cfg = SchedulerConfig(subsample_init=1, subsample_min=1, subsample_max=15,
                          queue_threshold=10)
    q = FeatureQueue(cfg)
    for tid in range(200):
        q.enqueue(tracklet(2, track_id=tid))
    steps = 0
    while q.k < cfg.subsample_max:
        q.dequeue()
        steps += 1
    assert steps <= cfg.subsample_max - cfg.subsample_min


def test_overflow_flag_past_hard_cap():
    q = FeatureQueue(SchedulerConfig(hard_cap=10))
    for tid in range(10):
        q.enqueue(tracklet(2, track_id=tid))
    assert not q.overflowed
    q.enqueue(tracklet(2, track_id=10))
    assert q.overflowed
    assert q.peak_length == 11


def test_bounded_queue_under_feasible_load():
    """Arrivals at half the service rate never build an unbounded backlog."""
    rng = np.random.default_rng(5)
    q = FeatureQueue(SchedulerConfig(queue_threshold=10, hard_cap=10_000))
    worst = 0
    for tick in range(5000):
        if rng.random() < 0.5:
            q.enqueue(tracklet(2, track_id=tick))
        q.dequeue()
        worst = max(worst, len(q))
    assert worst <= q.cfg.queue_threshold + 20
    assert not q.overflowed


def test_config_validation():
    with pytest.raises(ConfigError):
        FeatureQueue(SchedulerConfig(subsample_init=0))
    with pytest.raises(ConfigError):
        FeatureQueue(SchedulerConfig(subsample_init=20, subsample_max=15))
    with pytest.raises(ConfigError):
        FeatureQueue(SchedulerConfig(hard_cap=0))


class ConstantProvider:
    def __init__(self, vec):
        self.vec = np.asarray(vec, dtype=np.float64)
        self.calls = []

    def extract(self, camera_id, observations):
        self.calls.append((camera_id, len(observations)))
        return np.tile(self.vec, (len(observations), 1))


class TwoVectorProvider:
    def extract(self, camera_id, observations):
        out = np.zeros((len(observations), 2))
        out[0::2, 0] = 1.0
        out[1::2, 1] = 1.0
        return out


def test_extract_identical_vectors_pass_through():
    q = FeatureQueue(SchedulerConfig(subsample_init=1))
    q.enqueue(tracklet(4))
    provider = ConstantProvider([0.6, 0.8])
    out = extract_and_attach(q.dequeue(), provider)
    assert np.allclose(out.feature, [0.6, 0.8])
    assert provider.calls == [("cam00", 4)]


def test_extract_equal_confidence_blend():
    q = FeatureQueue(SchedulerConfig(subsample_init=1))
    q.enqueue(tracklet(2))
    out = extract_and_attach(q.dequeue(), TwoVectorProvider())
    assert np.allclose(out.feature, [0.70711, 0.70711], atol=1e-5)


def test_extract_single_frame_normalizes():
    q = FeatureQueue(SchedulerConfig(subsample_init=5))
    q.enqueue(tracklet(2))  # subsample keeps only frame 0
    out = extract_and_attach(q.dequeue(), ConstantProvider([3.0, 4.0]))
    assert np.allclose(out.feature, [0.6, 0.8])


def test_extract_weighs_by_confidence():
    obs = (
        Observation(0, 0.0, BBox(0, 0, 10, 10), 1.0),
        Observation(1, 66.7, BBox(1, 0, 10, 10), 0.0),
    )
    q = FeatureQueue(SchedulerConfig(subsample_init=1))
    q.enqueue(Tracklet("cam00", 1, obs))
    out = extract_and_attach(q.dequeue(), TwoVectorProvider())
    # zero-confidence frame contributes nothing
    assert np.allclose(out.feature, [1.0, 0.0])
