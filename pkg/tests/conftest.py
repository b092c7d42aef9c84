"""Shared builders for tests: boxes, tubes, and ground truth from center paths."""

from tubeground.boxes import BoundingBox
from tubeground.grounding import GroundTruth
from tubeground.tracker import Tube


def box_at(cx, cy, w=10.0, h=20.0):
    return BoundingBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


def tube_from_boxes(boxes, start=0, tube_id=0, clip_id=0, emb=None):
    entries = tuple((start + i, b) for i, b in enumerate(boxes))
    return Tube(tube_id=tube_id, clip_id=clip_id, entries=entries, mean_embedding=emb)


def gt_from_boxes(boxes, start=0):
    return GroundTruth(
        start_frame=start, end_frame=start + len(boxes) - 1, boxes=tuple(boxes)
    )


def const_tube(n, cx=50.0, cy=50.0, start=0, tube_id=0, clip_id=0, w=10.0, h=20.0):
    return tube_from_boxes(
        [box_at(cx, cy, w, h) for _ in range(n)], start=start, tube_id=tube_id, clip_id=clip_id
    )
