"""Command line entry points.

    mcvt simulate --scenario s.txt --out data/ --seed 7
    mcvt fit-clm  --data-dir data/ --out links.txt
    mcvt run      --data-dir data/ --links links.txt --out run/
    mcvt eval     --data-dir data/ --pred run/trajectories.txt
    mcvt report   --trace run/trace.txt --fps 15
    mcvt report   --links links.txt --transitions data/gt_transitions.txt

Every stage knob is a manifest key; pass a whole file with ``--config``
and spot overrides with ``--set key=value`` (repeatable).

Exit codes: 0 success, 1 runtime failure (missing or malformed inputs),
2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunManifest, apply_kv
from .core import BBox
from .eval.ident import idf1_score
from .eval.reports import (
    LatencyTrace,
    format_kde_report,
    format_realtime_report,
    kde_report,
    realtime_report,
)
from .run import run, run_edges_offline
from .server.association import read_trajectory_table
from .server.clm import fit_camera_links, read_links, write_links
from .sim.render import Dataset, write_dataset
from .sim.scenario import read_gt_boxes, read_gt_transitions, read_scenario
from .wire.codec import WireError


def _parse_sets(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_FLAG_TO_KEY = {"data_dir": "data_dir", "links": "links_path",
                "out": "out_dir", "mode": "mode", "seed": "seed"}


def _manifest(args: argparse.Namespace) -> RunManifest:
    m = RunManifest.from_file(args.config) if args.config else RunManifest()
    overrides = _parse_sets(args.set)
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = str(value)
    m.apply_overrides(overrides)
    return m


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = read_scenario(args.scenario)
    overrides = _parse_sets(args.set)
    if overrides:
        apply_kv(cfg, overrides)
        cfg.validate()
    world, gt = write_dataset(args.out, cfg, args.seed)
    print(f"wrote {args.out}: {len(world.cameras)} cameras, "
          f"{len(world.vehicles)} vehicles, {world.duration_s:.1f}s, "
          f"{len(gt.boxes)} gt boxes, {len(gt.transitions)} transitions")
    return 0


def cmd_fit_clm(args: argparse.Namespace) -> int:
    manifest = _manifest(args)
    if not manifest.data_dir:
        raise ConfigError("fit-clm needs --data-dir")
    dataset = Dataset(manifest.data_dir)
    tracklets = run_edges_offline(manifest, dataset)
    links, warnings = fit_camera_links(
        tracklets, dataset.pairs, dataset.image_w_by_camera,
        manifest.zone_config(), manifest.link_config())
    missing = [p for p in dataset.pairs if p not in links]
    write_links(args.out, links, missing=missing)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {args.out}: {len(links)} of {len(dataset.pairs)} declared pairs fitted")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    manifest = _manifest(args)
    if manifest.links_path:
        known, declared_missing = read_links(manifest.links_path)
        if not known and not declared_missing:
            print(f"warning: no link blocks in {manifest.links_path}", file=sys.stderr)
    result = run(manifest)
    s = result.server_stats
    dropped = sum(c["dropped"] for c in result.channel_stats.values())
    sent = sum(c["sent"] for c in result.channel_stats.values())
    print(f"{s['ingested']} tracklets ingested ({dropped} of {sent} lost in transit), "
          f"{s['remerges']} re-merges, {s['matches']} cross-camera matches, "
          f"{len(result.trajectories)} global trajectories")
    if result.id_score is not None:
        print(f"idf1 {result.id_score.idf1:.2f} against ground truth")
    if manifest.out_dir:
        print(f"wrote {Path(manifest.out_dir) / 'trajectories.txt'}")
        if result.trace is not None:
            print(f"wrote {Path(manifest.out_dir) / 'trace.txt'}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    gt_boxes = read_gt_boxes(Path(args.data_dir) / "gt_boxes.txt")
    pred_rows = read_trajectory_table(args.pred)
    gt = [(b.camera_id, b.frame_index, b.vehicle_id, b.bbox) for b in gt_boxes]
    pred = [(r.camera_id, r.frame_index, r.global_id, BBox(r.x, r.y, r.w, r.h))
            for r in pred_rows]
    score = idf1_score(gt, pred, iou_threshold=args.iou)
    print(f"idf1 {score.idf1:.2f}  idp {score.idp:.2f}  idr {score.idr:.2f}")
    print(f"idtp {score.idtp}  idfp {score.idfp}  idfn {score.idfn}  "
          f"({score.n_gt} gt boxes, {score.n_pred} predicted)")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    did = False
    if args.trace:
        trace = LatencyTrace.load(args.trace)
        print(format_realtime_report(realtime_report(trace, args.fps)))
        did = True
    if args.links:
        if not args.transitions:
            raise ConfigError("--links needs --transitions for the true gaps")
        links, missing = read_links(args.links)
        transitions = read_gt_transitions(args.transitions)
        gaps: dict[tuple[str, str], list[float]] = {}
        for t in transitions:
            gaps.setdefault((t.from_camera, t.to_camera), []).append(t.gap_s)
        for pair in sorted(links):
            name = f"{pair[0]}->{pair[1]}"
            if pair in gaps:
                print(format_kde_report(name, kde_report(links[pair].kde, gaps[pair])))
            else:
                print(f"{name}: no true transitions to compare against")
        for pair in missing:
            print(f"{pair[0]}->{pair[1]}: no link was fitted")
        did = True
    if not did:
        raise ConfigError("report needs --trace and/or --links")
    return 0


def _add_manifest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run manifest file (key value lines)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one manifest key (repeatable)")
    p.add_argument("--seed", type=int, help="noise and channel seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcvt",
        description="multi-camera vehicle tracking on synthetic corridors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a scenario into a dataset directory")
    p.add_argument("--scenario", required=True, help="scenario definition file")
    p.add_argument("--out", required=True, help="dataset directory to create")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one scenario key (repeatable)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit-clm", help="fit camera links from a dataset's edge output")
    p.add_argument("--data-dir", required=True, dest="data_dir")
    p.add_argument("--out", required=True, help="links file to write")
    _add_manifest_flags(p)
    p.set_defaults(func=cmd_fit_clm)

    p = sub.add_parser("run", help="run edges, channel and server over a dataset")
    p.add_argument("--data-dir", required=True, dest="data_dir")
    p.add_argument("--links", help="fitted links file")
    p.add_argument("--out", help="output directory for trajectories and stats")
    p.add_argument("--mode", choices=["virtual", "wallclock"])
    _add_manifest_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score trajectories against ground truth")
    p.add_argument("--data-dir", required=True, dest="data_dir")
    p.add_argument("--pred", required=True, help="trajectory table from a run")
    p.add_argument("--iou", type=float, default=0.5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="latency and travel-time density reports")
    p.add_argument("--trace", help="latency trace from a wallclock run")
    p.add_argument("--fps", type=float, default=15.0)
    p.add_argument("--links", help="fitted links file")
    p.add_argument("--transitions", help="true transitions file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, WireError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
