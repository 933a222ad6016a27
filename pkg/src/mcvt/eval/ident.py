"""Identity-level tracking scores.

The protocol: within every (camera, frame), ground-truth and predicted
boxes are put in correspondence greedily by descending overlap, keeping
pairs at or above the overlap threshold. Correspondences are tallied per
(true identity, predicted identity), and a one-to-one identity mapping is
chosen to maximize the total tallied agreement. Frames where a truth has
no mapped prediction count against recall, predictions with no mapped
truth against precision.

Scores are percentages in [0, 100].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..core import BBox, iou

# (camera_id, frame_index, identity, bbox)
IdRow = tuple[str, int, int, BBox]


@dataclass(frozen=True)
class IdScore:
    idf1: float
    idp: float
    idr: float
    idtp: int
    idfp: int
    idfn: int
    n_gt: int
    n_pred: int


def _frame_correspondence(
    gts: Sequence[tuple[int, BBox]],
    preds: Sequence[tuple[int, BBox]],
    iou_threshold: float,
) -> list[tuple[int, int]]:
    cands = []
    for i, (_, gb) in enumerate(gts):
        for j, (_, pb) in enumerate(preds):
            v = iou(gb, pb)
            if v >= iou_threshold:
                cands.append((-v, i, j))
    cands.sort()
    used_g: set[int] = set()
    used_p: set[int] = set()
    pairs = []
    for _, i, j in cands:
        if i in used_g or j in used_p:
            continue
        used_g.add(i)
        used_p.add(j)
        pairs.append((i, j))
    return pairs


def idf1_score(
    gt: Sequence[IdRow],
    pred: Sequence[IdRow],
    iou_threshold: float = 0.5,
) -> IdScore:
    if not gt:
        raise ValueError("cannot score against empty ground truth")
    if not (0.0 < iou_threshold <= 1.0):
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")

    frames: dict[tuple[str, int], tuple[list, list]] = {}
    for cam, fi, gid, box in gt:
        frames.setdefault((cam, fi), ([], []))[0].append((gid, box))
    for cam, fi, pid, box in pred:
        frames.setdefault((cam, fi), ([], []))[1].append((pid, box))

    overlap: dict[tuple[int, int], int] = {}
    for key in sorted(frames):
        gts, preds = frames[key]
        for i, j in _frame_correspondence(gts, preds, iou_threshold):
            pair = (gts[i][0], preds[j][0])
            overlap[pair] = overlap.get(pair, 0) + 1

    n_gt, n_pred = len(gt), len(pred)
    idtp = 0
    if overlap:
        gt_ids = sorted({g for g, _ in overlap})
        pred_ids = sorted({p for _, p in overlap})
        m = np.zeros((len(gt_ids), len(pred_ids)))
        for (g, p), count in overlap.items():
            m[gt_ids.index(g), pred_ids.index(p)] = count
        rows, cols = linear_sum_assignment(-m)  # maximize total agreement
        idtp = int(m[rows, cols].sum())

    idfn = n_gt - idtp
    idfp = n_pred - idtp
    idf1 = 200.0 * idtp / (n_gt + n_pred) if (n_gt + n_pred) else 0.0
    idp = 100.0 * idtp / n_pred if n_pred else 0.0
    idr = 100.0 * idtp / n_gt
    return IdScore(idf1=idf1, idp=idp, idr=idr, idtp=idtp, idfp=idfp, idfn=idfn,
                   n_gt=n_gt, n_pred=n_pred)
