"""Detection post-processing: confidence floor, then greedy IoU suppression.

Suppression keeps the higher-confidence box of any pair overlapping strictly
above the NMS threshold; confidence ties fall back to the earlier detection.
Survivors come back in their original input order.
"""

from __future__ import annotations

from typing import Sequence

from ..config import DetectionFilterConfig
from ..core import Detection, iou


def filter_detections(
    detections: Sequence[Detection], cfg: DetectionFilterConfig
) -> list[Detection]:
    candidates = [
        (i, d) for i, d in enumerate(detections) if d.confidence >= cfg.confidence_threshold
    ]
    # visit high-confidence boxes first so they suppress, not get suppressed
    order = sorted(candidates, key=lambda pair: (-pair[1].confidence, pair[0]))
    suppressed: set[int] = set()
    for rank, (i, det) in enumerate(order):
        if i in suppressed:
            continue
        for j, other in order[rank + 1:]:
            if j in suppressed:
                continue
            if iou(det.bbox, other.bbox) > cfg.nms_iou:
                suppressed.add(j)
    return [d for i, d in candidates if i not in suppressed]
