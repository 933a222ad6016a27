import math

import numpy as np
import pytest

from mcvt.config import ConfigError
from mcvt.core import BBox, Observation, cosine_similarity
from mcvt.sim.features import (
    OracleFeatureProvider,
    StubFeatureProvider,
    tracklets_from_ground_truth,
)
from mcvt.sim.render import Dataset, render_frames, write_dataset
from mcvt.sim.scenario import (
    GtBox,
    ScenarioConfig,
    build_world,
    generate_ground_truth,
)


def small_cfg(**kw):
    base = dict(
        n_cameras=2, n_vehicles=2, directions="east",
        speed_min_mps=10.0, speed_max_mps=10.0, spawn_spacing_s=40.0,
    )
    base.update(kw)
    return ScenarioConfig(**base)


# ---------------------------------------------------------------------------
# world and ground truth


def test_single_vehicle_transit_time():
    cfg = small_cfg(n_vehicles=1, segment_m=100.0)
    world = build_world(cfg, seed=0)
    gt = generate_ground_truth(world)
    (tr,) = gt.transitions
    assert (tr.from_camera, tr.to_camera) == ("cam00", "cam01")
    # 100 m at 10 m/s; frame sampling can only stretch the measured gap
    assert 10.0 <= tr.gap_s < 10.0 + 2.0 / cfg.fps


def test_visible_window_duration():
    cfg = small_cfg(n_vehicles=1)
    world = build_world(cfg, seed=0)
    gt = generate_ground_truth(world)
    frames = [b.frame_index for b in gt.boxes if b.camera_id == "cam00"]
    # the box fits fully for window_m of center travel: 70 m at 10 m/s
    assert len(frames) == pytest.approx(7.0 * cfg.fps, abs=2)
    assert frames == list(range(min(frames), max(frames) + 1))


def test_same_seed_reproduces_bytes(tmp_path):
    cfg = small_cfg(det_jitter_px=2.0, det_miss_prob=0.1, fp_rate=0.5,
                    conf_sigma=0.1, frame_drop_prob=0.02)
    write_dataset(tmp_path / "a", cfg, seed=42)
    write_dataset(tmp_path / "b", cfg, seed=42)
    write_dataset(tmp_path / "c", cfg, seed=43)
    for name in ("frames_cam00.bin", "frames_cam01.bin", "gt_boxes.txt",
                 "gt_transitions.txt", "scenario.txt", "topology.txt"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "frames_cam00.bin").read_bytes() != \
        (tmp_path / "c" / "frames_cam00.bin").read_bytes()


def test_zero_vehicles_gives_empty_streams():
    cfg = small_cfg(n_vehicles=0)
    world = build_world(cfg, seed=0)
    assert world.vehicles == []
    assert world.pairs == [("cam00", "cam01")]
    gt = generate_ground_truth(world)
    assert gt.boxes == [] and gt.transitions == []
    frames = render_frames(world, gt, seed=0)
    assert set(frames) == {"cam00", "cam01"}
    assert all(f.detections == () for msgs in frames.values() for f in msgs)


def test_overtake_guard():
    # corridor 720 m, speeds 8..12: a fast follower gains up to 30 s
    with pytest.raises(ConfigError, match="overtake"):
        build_world(ScenarioConfig(spawn_spacing_s=25.0), seed=0)
    build_world(ScenarioConfig(spawn_spacing_s=32.0), seed=0)


def test_config_validation():
    with pytest.raises(ConfigError):
        build_world(small_cfg(fps=0.0), seed=0)
    with pytest.raises(ConfigError):
        build_world(small_cfg(det_miss_prob=1.5), seed=0)
    with pytest.raises(ConfigError):
        build_world(small_cfg(directions="north"), seed=0)
    with pytest.raises(ConfigError):
        build_world(small_cfg(n_vehicles=-1), seed=0)


def test_ground_truth_invariants():
    cfg = ScenarioConfig(n_vehicles=12, spawn_spacing_s=32.0)
    world = build_world(cfg, seed=7)
    gt = generate_ground_truth(world)
    for b in gt.boxes:
        assert 0.0 <= b.bbox.x and b.bbox.x + b.bbox.w <= cfg.image_w + 1e-6
        assert 0.0 <= b.bbox.y and b.bbox.y + b.bbox.h <= cfg.image_h + 1e-6
    for tr in gt.transitions:
        assert tr.gap_s > 0.0
    # eastbound vehicles visit cameras west to east, westbound the reverse
    east = {v.vehicle_id for v in world.vehicles if v.direction > 0}
    for tr in gt.transitions:
        a, b = int(tr.from_camera[3:]), int(tr.to_camera[3:])
        assert b == a + 1 if tr.vehicle_id in east else b == a - 1
    # every through-vehicle produces one transition per adjacent pair
    seen = {}
    for tr in gt.transitions:
        seen[tr.vehicle_id] = seen.get(tr.vehicle_id, 0) + 1
    assert all(n == cfg.n_cameras - 1 for n in seen.values())
    assert set(seen) == {v.vehicle_id for v in world.vehicles}


# ---------------------------------------------------------------------------
# rendering


def test_noiseless_render_equals_ground_truth():
    cfg = small_cfg()
    world = build_world(cfg, seed=3)
    gt = generate_ground_truth(world)
    frames = render_frames(world, gt, seed=3)
    want = {}
    for b in gt.boxes:
        want.setdefault((b.camera_id, b.frame_index), []).append(b.bbox)
    for cam, msgs in frames.items():
        for msg in msgs:
            got = [d[0] for d in msg.detections]
            assert got == want.get((cam, msg.frame_index), [])
            assert all(conf == 1.0 and cls == 0 for _, conf, cls in msg.detections)
    # no frames skipped without frame_drop_prob
    total = sum(len(m) for m in frames.values())
    assert total == 2 * int(np.ceil(world.duration_s * cfg.fps))


def test_miss_prob_one_leaves_only_false_positives():
    cfg = small_cfg(det_miss_prob=1.0, fp_rate=0.8)
    world = build_world(cfg, seed=5)
    gt = generate_ground_truth(world)
    frames = render_frames(world, gt, seed=5)
    dets = [d for msgs in frames.values() for f in msgs for d in f.detections]
    assert len(dets) > 0
    assert all(0.4 <= conf < 0.75 for _, conf, _ in dets)


def test_jitter_matches_folded_normal_mean():
    sigma = 2.0
    cfg = small_cfg(n_cameras=4, n_vehicles=4, det_jitter_px=sigma,
                    speed_min_mps=8.0, speed_max_mps=8.0)
    world = build_world(cfg, seed=9)
    gt = generate_ground_truth(world)
    frames = render_frames(world, gt, seed=9)
    truth = {}
    for b in gt.boxes:
        truth.setdefault((b.camera_id, b.frame_index), []).append(b.bbox)
    errors = []
    for cam, msgs in frames.items():
        for msg in msgs:
            gt_boxes = truth.get((cam, msg.frame_index), [])
            assert len(msg.detections) == len(gt_boxes)
            for (box, _, _), true in zip(msg.detections, gt_boxes):
                # skip samples the image border could have clamped
                if not (10.0 < true.x and true.x + true.w < cfg.image_w - 10.0):
                    continue
                errors.append(abs(box.cx - true.cx))
                errors.append(abs(box.cy - true.cy))
    assert len(errors) > 2000
    expected = sigma * math.sqrt(2.0 / math.pi)  # folded normal, about 1.596
    assert np.mean(errors) == pytest.approx(expected, abs=0.12)


def test_frame_drop_removes_whole_frames():
    cfg = small_cfg(frame_drop_prob=0.3)
    world = build_world(cfg, seed=1)
    gt = generate_ground_truth(world)
    frames = render_frames(world, gt, seed=1)
    n_total = int(np.ceil(world.duration_s * cfg.fps))
    for msgs in frames.values():
        kept = [m.frame_index for m in msgs]
        assert len(kept) < n_total
        assert kept == sorted(set(kept))  # surviving frames stay ordered, no dupes


# ---------------------------------------------------------------------------
# the feature oracle


def obs_at(frame, cx, cy):
    return Observation(frame, frame * (1000.0 / 15), BBox(cx - 10, cy - 20, 20, 40), 1.0)


def grid_boxes(n_vehicles, n_frames, cams=("a", "b")):
    boxes = []
    for cam in cams:
        for v in range(n_vehicles):
            for f in range(n_frames):
                boxes.append(GtBox(cam, f, v, BBox(90 + 100.0 * v, 340.0, 20, 40),
                                   37.0, -122.0))
    return boxes


def test_noiseless_identity_is_camera_invariant():
    boxes = grid_boxes(3, 5)
    provider = OracleFeatureProvider(boxes, dim=64, seed=0)
    fa = provider.extract("a", [obs_at(0, 100.0, 360.0)])
    fb = provider.extract("b", [obs_at(3, 100.0, 360.0)])
    assert cosine_similarity(fa[0], fb[0]) == pytest.approx(1.0)
    # and a different identity is far away
    fc = provider.extract("a", [obs_at(0, 200.0, 360.0)])
    assert abs(cosine_similarity(fa[0], fc[0])) < 1e-9


def test_distinct_random_identities_have_small_overlap():
    provider = OracleFeatureProvider(grid_boxes(1, 1), dim=64, seed=0)
    # ids beyond the one-hot range draw random unit vectors
    vecs = np.stack([provider.identity(100 + i) for i in range(120)])
    assert np.allclose(np.linalg.norm(vecs, axis=1), 1.0)
    cos = vecs @ vecs.T
    off = cos[np.triu_indices(len(vecs), k=1)]
    # inner products of random unit vectors in R^64 have rms 1/sqrt(64)
    assert np.sqrt(np.mean(off ** 2)) == pytest.approx(0.125, abs=0.02)
    assert np.abs(off).max() < 0.6


def test_noise_preserves_identity_margin():
    n_vehicles, n_frames = 10, 100
    boxes = grid_boxes(n_vehicles, n_frames)
    provider = OracleFeatureProvider(boxes, dim=64, seed=1, noise=0.1)
    feats = {}
    for cam in ("a", "b"):
        for v in range(n_vehicles):
            obs = [obs_at(f, 100.0 + 100.0 * v, 360.0) for f in range(n_frames)]
            feats[(cam, v)] = provider.extract(cam, obs)
    same = [
        float(np.mean(np.sum(feats[("a", v)] * feats[("b", v)], axis=1)))
        for v in range(n_vehicles)
    ]
    diff = [
        float(np.mean(np.sum(feats[("a", v)] * feats[("b", w)], axis=1)))
        for v in range(n_vehicles) for w in range(n_vehicles) if w != v
    ]
    assert np.mean(same) - np.mean(diff) >= 0.5


def test_camera_bias_lowers_cross_camera_similarity():
    boxes = grid_boxes(2, 5)
    provider = OracleFeatureProvider(boxes, dim=64, seed=2, camera_bias=0.5)
    fa = provider.extract("a", [obs_at(0, 100.0, 360.0)])[0]
    fb = provider.extract("b", [obs_at(0, 100.0, 360.0)])[0]
    fa2 = provider.extract("a", [obs_at(1, 100.0, 360.0)])[0]
    assert cosine_similarity(fa, fa2) == pytest.approx(1.0)  # bias is deterministic
    assert 0.5 < cosine_similarity(fa, fb) < 0.999


def test_unmatched_observation_gets_random_feature():
    provider = OracleFeatureProvider(grid_boxes(1, 1), dim=64, seed=0)
    out = provider.extract("a", [obs_at(0, 900.0, 100.0)])  # nowhere near truth
    assert out.shape == (1, 64)
    assert np.linalg.norm(out[0]) == pytest.approx(1.0)
    assert provider.extract("a", []).shape == (0, 64)


def test_match_tolerance_boundary():
    provider = OracleFeatureProvider(grid_boxes(1, 1), dim=8, seed=0, match_tol_px=12.0)
    assert provider.match_vehicle("a", obs_at(0, 111.9, 360.0)) == 0
    assert provider.match_vehicle("a", obs_at(0, 113.0, 360.0)) is None


def test_stub_provider_constant_rows():
    stub = StubFeatureProvider(dim=16)
    out = stub.extract("anything", [obs_at(0, 1.0, 1.0), obs_at(1, 2.0, 2.0)])
    assert out.shape == (2, 16)
    assert np.allclose(out, out[0])
    assert np.linalg.norm(out[0]) == pytest.approx(1.0)


def test_tracklets_from_ground_truth_shape():
    cfg = small_cfg()
    world = build_world(cfg, seed=4)
    gt = generate_ground_truth(world)
    provider = OracleFeatureProvider(gt.boxes, dim=64, seed=4)
    by_cam = tracklets_from_ground_truth(gt.boxes, cfg.fps, provider)
    assert set(by_cam) == {"cam00", "cam01"}
    for cam, tracklets in by_cam.items():
        assert {t.track_id for t in tracklets} == {0, 1}
        for t in tracklets:
            assert t.camera_id == cam
            assert np.allclose(t.feature, provider.identity(t.track_id))
            frames = [o.frame_index for o in t.observations]
            assert frames == sorted(frames)
            assert all(o.gps is not None for o in t.observations)


# ---------------------------------------------------------------------------
# dataset files


def test_dataset_round_trip(tmp_path):
    cfg = small_cfg(det_jitter_px=1.0, fp_rate=0.2)
    world, gt = write_dataset(tmp_path, cfg, seed=11)
    ds = Dataset(tmp_path)
    assert ds.seed == 11
    assert ds.scenario.n_cameras == 2
    assert ds.scenario.duration_s == pytest.approx(world.duration_s)
    assert ds.pairs == world.pairs
    assert [c.camera_id for c in ds.cameras] == ["cam00", "cam01"]
    assert ds.image_w_by_camera == {"cam00": 1280.0, "cam01": 1280.0}
    assert set(ds.frames) == {"cam00", "cam01"}
    assert ds.frame_count() == int(np.ceil(world.duration_s * cfg.fps))
    assert ds.ground_truth is not None
    assert len(ds.ground_truth.boxes) == len(gt.boxes)
    for got, want in zip(ds.ground_truth.boxes, gt.boxes):
        assert (got.camera_id, got.frame_index, got.vehicle_id) == \
            (want.camera_id, want.frame_index, want.vehicle_id)
        assert got.bbox.x == pytest.approx(want.bbox.x, abs=1e-5)
        assert got.lat == pytest.approx(want.lat, abs=1e-6)
    assert len(ds.ground_truth.transitions) == len(gt.transitions)
    for got, want in zip(ds.ground_truth.transitions, gt.transitions):
        assert got.vehicle_id == want.vehicle_id
        assert got.gap_s == pytest.approx(want.gap_s, abs=1e-6)
