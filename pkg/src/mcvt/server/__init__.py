from .remerge import remerge
from .zones import Zone, cluster_zones, dbscan_labels
from .clm import (
    CameraLink,
    TransitionKde,
    candidate_transits,
    eval_kde,
    fit_camera_links,
    fit_kde,
    gate_candidates,
    read_links,
    select_link,
    write_links,
    zone_pair_score,
)
from .association import (
    AssociationServer,
    GlobalTrajectory,
    TrajectoryRow,
    UnionFind,
    build_cost_matrix,
    greedy_match,
    pair_cost,
    read_trajectory_table,
    write_trajectory_table,
)

__all__ = [
    "remerge",
    "Zone",
    "cluster_zones",
    "dbscan_labels",
    "CameraLink",
    "TransitionKde",
    "candidate_transits",
    "eval_kde",
    "fit_camera_links",
    "fit_kde",
    "gate_candidates",
    "read_links",
    "select_link",
    "write_links",
    "zone_pair_score",
    "AssociationServer",
    "GlobalTrajectory",
    "TrajectoryRow",
    "UnionFind",
    "build_cost_matrix",
    "greedy_match",
    "pair_cost",
    "read_trajectory_table",
    "write_trajectory_table",
]
