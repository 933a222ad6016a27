import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linear_sum_assignment

from mcvt.config import AssociationConfig, ConfigError, RemergeConfig
from mcvt.core import BBox, Observation, Tracklet
from mcvt.server.association import (
    AssociationServer,
    TrajectoryRow,
    UnionFind,
    build_cost_matrix,
    greedy_match,
    pair_cost,
    read_trajectory_table,
    trajectory_rows,
    write_trajectory_table,
)
from mcvt.server.clm import CameraLink, fit_kde
from mcvt.server.zones import Zone
from mcvt.wire.codec import TrackletMsg, encode_tracklet_msg


FRAME_MS = 1000.0 / 15
E1 = [1.0, 0.0]
E2 = [0.0, 1.0]


def track(camera, tid, start_s, end_s, x0, x1, feature, y=360.0):
    n = max(2, int(round((end_s - start_s) * 15)) + 1)
    xs = np.linspace(x0, x1, n)
    f0 = int(round(start_s * 15))  # frame index tied to the stream clock
    obs = tuple(
        Observation(f0 + i, (f0 + i) * FRAME_MS, BBox(x - 10.0, y - 20.0, 20.0, 40.0), 1.0)
        for i, x in enumerate(xs)
    )
    feat = None if feature is None else np.asarray(feature, dtype=np.float64)
    return Tracklet(camera, tid, obs, feat)


def make_link(frm="cam00", to="cam01", samples=(14.0, 15.0, 16.0), min_density=0.002):
    return CameraLink(
        from_camera=frm,
        to_camera=to,
        exit_zone=Zone(frm, "exit", 1200.0, 360.0, 60.0, 10),
        entry_zone=Zone(to, "entry", 100.0, 360.0, 60.0, 10),
        kde=fit_kde(list(samples), 5.0),
        min_density=min_density,
    )


# ---------------------------------------------------------------------------
# cost


def test_pair_cost_hand_values():
    kde = fit_kde([10.0], 5.0)
    a = np.array(E1)
    # identical features at the density mode: 0 - 5 * 0.0797885
    assert pair_cost(a, a, kde, 10.0, 1.0, 5.0) == pytest.approx(-0.3989422804, abs=1e-9)
    far = 1e6  # density is numerically zero out here
    assert pair_cost(a, np.array(E2), kde, far, 1.0, 5.0) == pytest.approx(1.0)
    assert pair_cost(a, a, kde, far, 1.0, 5.0) == pytest.approx(0.0)


def test_cost_matrix_gates_to_inf():
    link = make_link()
    cfg = AssociationConfig()
    a = track("cam00", 1, 0.0, 10.0, 100.0, 1200.0, E1)
    b = track("cam01", 1, 25.0, 35.0, 100.0, 1200.0, E1)       # gap 15 s, plausible
    b_late = track("cam01", 2, 500.0, 510.0, 100.0, 1200.0, E1)  # implausible gap
    cost = build_cost_matrix([a], [b, b_late], link, cfg)
    assert cost.shape == (1, 2)
    assert np.isinf(cost[0, 1])
    dt = (b.start_ms - a.end_ms) / 1000.0
    assert cost[0, 0] == pytest.approx(
        pair_cost(a.feature, b.feature, link.kde, dt, 1.0, 5.0))
    assert cost[0, 0] < 0.0


def test_cost_matrix_empty_and_featureless():
    link = make_link()
    cfg = AssociationConfig()
    assert build_cost_matrix([], [], link, cfg).shape == (0, 0)
    a = track("cam00", 1, 0.0, 10.0, 100.0, 1200.0, None)
    b = track("cam01", 1, 25.0, 35.0, 100.0, 1200.0, E1)
    cost = build_cost_matrix([a], [b], link, cfg)
    assert np.isinf(cost).all()  # no feature, no match


def test_greedy_examples():
    cost = np.array([[0.1, 0.5], [0.3, 0.2]])
    assert greedy_match(cost, 0.4) == [(0, 0), (1, 1)]
    assert greedy_match(cost, 0.15) == [(0, 0)]
    assert greedy_match(np.full((3, 3), np.inf), 0.4) == []


def test_greedy_threshold_inclusive():
    assert greedy_match(np.array([[0.4]]), 0.4) == [(0, 0)]
    assert greedy_match(np.array([[0.4000001]]), 0.4) == []


def test_greedy_tie_break_row_major():
    cost = np.array([[0.2, 0.2], [0.2, 0.2]])
    assert greedy_match(cost, 1.0) == [(0, 0), (1, 1)]


def test_greedy_rejects_bad_input():
    with pytest.raises(ValueError):
        greedy_match(np.array([0.1, 0.2]), 1.0)
    with pytest.raises(ValueError):
        greedy_match(np.array([[np.nan]]), 1.0)


def test_greedy_terminates_with_infinite_threshold():
    # masked cells stay unmatchable even when the threshold accepts anything
    cost = np.array([[0.3, np.inf], [np.inf, np.inf]])
    assert greedy_match(cost, np.inf) == [(0, 0)]


def greedy_oracle(cost, threshold):
    """Literal restatement: scan all remaining cells for the global minimum."""
    cost = np.array(cost, dtype=np.float64)
    used_r, used_c, out = set(), set(), []
    while True:
        best = None
        for r in range(cost.shape[0]):
            if r in used_r:
                continue
            for c in range(cost.shape[1]):
                if c in used_c:
                    continue
                if best is None or cost[r, c] < best[0]:
                    best = (cost[r, c], r, c)
        if best is None or not np.isfinite(best[0]) or not best[0] <= threshold:
            return out
        out.append((best[1], best[2]))
        used_r.add(best[1])
        used_c.add(best[2])


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1),
    st.floats(-0.5, 1.5),
)
def test_greedy_matches_oracle(n_rows, n_cols, seed, threshold):
    rng = np.random.default_rng(seed)
    cost = rng.uniform(-1.0, 2.0, size=(n_rows, n_cols))
    cost[rng.uniform(size=cost.shape) < 0.2] = np.inf
    assert greedy_match(cost, threshold) == greedy_oracle(cost, threshold)


def test_greedy_optimal_when_diagonally_dominant():
    # one clearly-best partner per row: greedy equals the optimal assignment
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        cost = rng.uniform(1.0, 2.0, size=(n, n))
        perm = rng.permutation(n)
        cost[np.arange(n), perm] = rng.uniform(0.0, 0.1, size=n)
        got = sorted(greedy_match(cost, np.inf))
        rows, cols = linear_sum_assignment(cost)
        assert got == sorted(zip(rows.tolist(), cols.tolist()))


# ---------------------------------------------------------------------------
# union-find


def test_union_find_basics():
    uf = UnionFind()
    for k in ("a", "b", "c", "d"):
        uf.add(k)
    uf.add("a")  # idempotent
    assert len(uf) == 4
    uf.union("a", "b")
    uf.union("c", "d")
    assert uf.connected("a", "b") and uf.connected("c", "d")
    assert not uf.connected("a", "c")
    uf.union("b", "d")
    assert uf.connected("a", "d")
    assert uf.find("d") == "a"  # earliest-added key anchors the merged set
    assert uf.groups() == [["a", "b", "c", "d"]]


def test_union_find_groups_order():
    uf = UnionFind()
    for k in (3, 1, 2):
        uf.add(k)
    uf.union(1, 2)
    assert uf.groups() == [[3], [1, 2]]


def test_union_find_unknown_key():
    uf = UnionFind()
    with pytest.raises(KeyError):
        uf.find("ghost")


# ---------------------------------------------------------------------------
# the server


def server_for(links, cams=("cam00", "cam01"), remerge_cfg=None):
    return AssociationServer(
        links, {c: 1280.0 for c in cams}, AssociationConfig(),
        remerge_cfg=remerge_cfg,
    )


def test_cycle_on_empty_buffer():
    srv = server_for({("cam00", "cam01"): make_link()})
    srv.run_cycle(1000.0)
    assert srv.stats["cycles"] == 1
    assert srv.stats["matches"] == 0
    assert srv.finalize(2000.0) == []


def test_single_cross_camera_match():
    srv = server_for({("cam00", "cam01"): make_link()})
    a = track("cam00", 7, 0.0, 10.0, 100.0, 1200.0, E1)
    b = track("cam01", 3, 25.0, 35.0, 100.0, 1200.0, E1)
    srv.ingest_tracklet(a)
    srv.ingest_tracklet(b)
    assert srv.buffered_count == 2
    trajs = srv.finalize(40_000.0)
    assert len(trajs) == 1
    assert trajs[0].global_id == 0
    assert trajs[0].cameras == ("cam00", "cam01")
    assert [t.track_id for t in trajs[0].tracklets] == [7, 3]
    assert srv.stats["matches"] == 1
    assert srv.buffered_count == 0


def test_dissimilar_features_stay_separate():
    srv = server_for({("cam00", "cam01"): make_link()})
    srv.ingest_tracklet(track("cam00", 1, 0.0, 10.0, 100.0, 1200.0, E1))
    srv.ingest_tracklet(track("cam01", 2, 25.0, 35.0, 100.0, 1200.0, E2))
    trajs = srv.finalize(40_000.0)
    assert len(trajs) == 2
    assert srv.stats["matches"] == 0


def test_chain_across_three_cameras():
    links = {
        ("cam00", "cam01"): make_link("cam00", "cam01"),
        ("cam01", "cam02"): make_link("cam01", "cam02"),
    }
    srv = server_for(links, cams=("cam00", "cam01", "cam02"))
    srv.ingest_tracklet(track("cam00", 1, 0.0, 10.0, 100.0, 1200.0, E1))
    srv.ingest_tracklet(track("cam01", 1, 25.0, 35.0, 100.0, 1200.0, E1))
    srv.ingest_tracklet(track("cam02", 1, 50.0, 60.0, 100.0, 1200.0, E1))
    trajs = srv.finalize(70_000.0)
    assert len(trajs) == 1
    assert trajs[0].cameras == ("cam00", "cam01", "cam02")
    assert srv.stats["matches"] == 2


def test_competition_resolves_to_cheapest():
    # two plausible entries; the similar one wins, the other gets its own id
    srv = server_for({("cam00", "cam01"): make_link()})
    mixed = np.array([1.0, 0.2])
    srv.ingest_tracklet(track("cam00", 1, 0.0, 10.0, 100.0, 1200.0, E1))
    srv.ingest_tracklet(track("cam01", 1, 25.0, 35.0, 100.0, 1200.0, mixed))
    srv.ingest_tracklet(track("cam01", 2, 25.5, 35.5, 100.0, 1200.0, E1))
    trajs = srv.finalize(40_000.0)
    assert len(trajs) == 2
    winner = next(t for t in trajs if len(t.tracklets) == 2)
    assert {(t.camera_id, t.track_id) for t in winner.tracklets} == {("cam00", 1), ("cam01", 2)}


def test_periodic_cycles_and_eviction():
    cfg = AssociationConfig(cycle_period_s=10.0, buffer_horizon_s=20.0)
    srv = AssociationServer(
        {("cam00", "cam01"): make_link()}, {"cam00": 1280.0, "cam01": 1280.0}, cfg)
    srv.ingest_tracklet(track("cam00", 1, 0.0, 10.0, 100.0, 1200.0, E1))
    assert srv.maybe_run_cycles(9_999.0) == 0
    assert srv.maybe_run_cycles(10_000.0) == 1
    assert srv.buffered_count == 1  # still inside the horizon
    assert srv.maybe_run_cycles(45_000.0) == 3
    assert srv.buffered_count == 0  # aged out: ended 10 s, horizon 20 s, now 40 s
    assert srv.stats["evicted"] == 1
    trajs = srv.trajectories()
    assert len(trajs) == 1 and trajs[0].global_id == 0


def test_eviction_never_splits_an_identity():
    # partner arrives before the component ages out; late union keeps one id
    cfg = AssociationConfig(cycle_period_s=10.0, buffer_horizon_s=30.0)
    srv = AssociationServer(
        {("cam00", "cam01"): make_link()}, {"cam00": 1280.0, "cam01": 1280.0}, cfg)
    srv.ingest_tracklet(track("cam00", 1, 0.0, 10.0, 100.0, 1200.0, E1))
    srv.maybe_run_cycles(20_000.0)
    srv.ingest_tracklet(track("cam01", 1, 25.0, 35.0, 100.0, 1200.0, E1))
    trajs = srv.finalize(80_000.0)
    assert len(trajs) == 1
    assert len(trajs[0].tracklets) == 2


def test_ingest_wire_payload():
    srv = server_for({("cam00", "cam01"): make_link()})
    t = track("cam00", 5, 0.0, 10.0, 100.0, 1200.0, E1)
    msg = TrackletMsg.from_tracklet(t, emitted_at_ms=t.end_ms)
    got = srv.ingest(encode_tracklet_msg(msg))
    assert got.track_id == 5
    assert srv.buffered_count == 1
    assert srv.stats["ingested"] == 1


def test_rejects_undeclared_camera():
    srv = server_for({("cam00", "cam01"): make_link()})
    with pytest.raises(ValueError):
        srv.ingest_tracklet(track("cam99", 1, 0.0, 10.0, 100.0, 1200.0, E1))
    with pytest.raises(ValueError):
        AssociationServer(
            {("cam00", "cam01"): make_link()}, {"cam00": 1280.0}, AssociationConfig())


def test_invalid_config_rejected():
    with pytest.raises(ConfigError):
        AssociationServer(
            {}, {"cam00": 1280.0},
            AssociationConfig(cycle_period_s=100.0, buffer_horizon_s=50.0))


def test_in_server_remerge_shares_identity():
    srv = server_for({("cam00", "cam01"): make_link()}, remerge_cfg=RemergeConfig())
    # one physical pass through cam00, fragmented mid-view
    srv.ingest_tracklet(track("cam00", 1, 0.0, 5.0, 100.0, 650.0, E1))
    srv.ingest_tracklet(track("cam00", 2, 5.2, 10.0, 660.0, 1200.0, E1))
    srv.ingest_tracklet(track("cam01", 1, 25.0, 35.0, 100.0, 1200.0, E1))
    trajs = srv.finalize(40_000.0)
    assert len(trajs) == 1
    assert srv.stats["remerges"] == 1
    assert len(trajs[0].tracklets) == 2  # merged cam00 fragment + cam01


# ---------------------------------------------------------------------------
# the output table


def test_trajectory_table_round_trip(tmp_path):
    srv = server_for({("cam00", "cam01"): make_link()})
    srv.ingest_tracklet(track("cam00", 7, 0.0, 10.0, 100.0, 1200.0, E1))
    srv.ingest_tracklet(track("cam01", 3, 25.0, 35.0, 100.0, 1200.0, E1))
    rows = trajectory_rows(srv.finalize(40_000.0))
    assert len(rows) == 151 * 2
    assert all(r.global_id == 0 for r in rows)
    assert rows[0].lat is None and rows[0].lon is None
    path = tmp_path / "trajectories.txt"
    write_trajectory_table(path, rows)
    back = read_trajectory_table(path)
    assert len(back) == len(rows)
    for got, want in zip(back, rows):
        assert (got.global_id, got.camera_id, got.track_id, got.frame_index) == \
            (want.global_id, want.camera_id, want.track_id, want.frame_index)
        # text file keeps 9 significant digits
        for attr in ("x", "y", "w", "h"):
            assert getattr(got, attr) == pytest.approx(getattr(want, attr), rel=1e-8)
        assert got.lat is None and got.lon is None


def test_trajectory_table_gps_and_errors(tmp_path):
    row = TrajectoryRow(1, "cam00", 2, 3, 10.0, 20.0, 30.0, 40.0, lat=45.5, lon=-73.6)
    path = tmp_path / "t.txt"
    write_trajectory_table(path, [row])
    (back,) = read_trajectory_table(path)
    assert back == row
    path.write_text("0 cam00 1 2 3 4\n")
    with pytest.raises(ValueError, match="expected 10 fields"):
        read_trajectory_table(path)
    path.write_text("x cam00 1 2 3 4 5 6 - -\n")
    with pytest.raises(ValueError, match=":1:"):
        read_trajectory_table(path)
