import numpy as np
from hypothesis import given, strategies as st

from mcvt.config import DetectionFilterConfig
from mcvt.core import BBox, Detection, iou
from mcvt.edge.filtering import filter_detections


CFG = DetectionFilterConfig(confidence_threshold=0.35, nms_iou=0.40)


def det(x, conf, y=0.0, w=10.0, h=10.0):
    return Detection("cam00", 0, 0.0, BBox(x, y, w, h), conf)


def test_confidence_threshold_is_inclusive():
    assert filter_detections([det(0, 0.34)], CFG) == []
    assert len(filter_detections([det(0, 0.35)], CFG)) == 1


def test_duplicate_suppressed_by_confidence():
    survivors = filter_detections([det(0, 0.8), det(0, 0.9)], CFG)
    assert [d.confidence for d in survivors] == [0.9]


def test_disjoint_boxes_both_survive():
    survivors = filter_detections([det(0, 0.9), det(100, 0.8)], CFG)
    assert len(survivors) == 2


def test_overlap_threshold_is_strict():
    # 0.5 overlap suppresses, 1/3 does not; the cut sits between them
    a = det(0, 0.9)
    half = det(0, 0.8, h=5.0)
    third = det(5, 0.8)
    assert iou(a.bbox, half.bbox) == 0.5
    assert iou(a.bbox, third.bbox) < 0.40
    assert len(filter_detections([a, half], CFG)) == 1
    assert len(filter_detections([a, third], CFG)) == 2


def test_survivors_keep_input_order():
    dets = [det(100, 0.5), det(0, 0.9), det(200, 0.7)]
    out = filter_detections(dets, CFG)
    assert [d.bbox.x for d in out] == [100, 0, 200]


def test_chain_suppression_uses_winners_only():
    # b overlaps both a and c; a wins and removes b, but c only overlaps b,
    # so c survives even though it transitively touches the cluster
    a = det(0, 0.9)
    b = det(4, 0.8)
    c = det(8, 0.7)
    assert iou(a.bbox, c.bbox) < 0.40 < iou(a.bbox, b.bbox)
    out = filter_detections([a, b, c], CFG)
    assert [d.confidence for d in out] == [0.9, 0.7]


@given(st.lists(st.tuples(st.floats(0, 50), st.floats(0, 1)), max_size=12))
def test_no_surviving_pair_overlaps(raw):
    dets = [det(x, c) for x, c in raw]
    out = filter_detections(dets, CFG)
    for d in out:
        assert d.confidence >= CFG.confidence_threshold
    for i, a in enumerate(out):
        for b in out[i + 1:]:
            assert iou(a.bbox, b.bbox) <= CFG.nms_iou
