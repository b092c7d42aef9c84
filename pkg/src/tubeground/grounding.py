"""Tube/description matching scores, training labels, and vIoU evaluation.

The temporal overlap score is the fraction of ground-truth frames the
proposal covers; the spatial score is the mean box IoU over the shared
frames.  A proposal is a positive sample when overlap > 0.7 and spatial
IoU > 0.5, a negative one when overlap < 0.3 or spatial IoU < 0.3, and is
ignored otherwise (inequalities strict, so scores sitting exactly on a
threshold are ignored).  vIoU sums box IoU over the temporal intersection
and normalizes by the temporal union.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

from .boxes import BoundingBox, iou
from .errors import MalformedInputError
from .tracker import Tube

POSITIVE_OVERLAP = 0.7
POSITIVE_IOU = 0.5
NEGATIVE_OVERLAP = 0.3
NEGATIVE_IOU = 0.3


@dataclass(frozen=True)
class GroundTruth:
    """Annotated person tube: one box per frame over [start_frame, end_frame]."""

    start_frame: int
    end_frame: int
    boxes: tuple[BoundingBox, ...]

    def __post_init__(self) -> None:
        if self.start_frame > self.end_frame:
            raise MalformedInputError("ground truth span is empty")
        expected = self.end_frame - self.start_frame + 1
        if len(self.boxes) != expected:
            raise MalformedInputError(
                f"ground truth needs {expected} boxes for "
                f"[{self.start_frame}, {self.end_frame}], got {len(self.boxes)}"
            )

    @property
    def num_frames(self) -> int:
        return self.end_frame - self.start_frame + 1

    def frames(self) -> range:
        return range(self.start_frame, self.end_frame + 1)

    def box_at(self, frame: int) -> BoundingBox:
        return self.boxes[frame - self.start_frame]


@dataclass(frozen=True)
class MatchScores:
    s_overlap: float
    s_iou: float


class MatchLabelValue(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    IGNORED = "ignored"


@dataclass(frozen=True)
class MatchLabel:
    value: MatchLabelValue
    scores: MatchScores


@dataclass(frozen=True)
class FrameTargets:
    """Per-tube-frame supervision: binary in-span labels and boundary distances.

    ``cls`` has one entry per tube frame.  ``reg`` aligns with ``cls`` and
    holds (distance to span start, distance to span end) where ``cls`` is 1,
    ``None`` elsewhere.
    """

    cls: tuple[int, ...]
    reg: tuple[Optional[tuple[int, int]], ...]

    @property
    def num_frames(self) -> int:
        return len(self.cls)

    @property
    def num_positive(self) -> int:
        return sum(self.cls)


def _intersection(tube: Tube, gt: GroundTruth) -> range:
    lo = max(tube.start_frame, gt.start_frame)
    hi = min(tube.end_frame, gt.end_frame)
    return range(lo, hi + 1) if lo <= hi else range(0)


def match_scores(tube: Tube, gt: GroundTruth) -> MatchScores:
    """Temporal coverage of the ground truth and mean box IoU on shared frames."""
    inter = _intersection(tube, gt)
    s_overlap = len(inter) / gt.num_frames
    if len(inter) == 0:
        return MatchScores(s_overlap=s_overlap, s_iou=0.0)
    total = sum(iou(tube.box_at(f), gt.box_at(f)) for f in inter)
    return MatchScores(s_overlap=s_overlap, s_iou=total / len(inter))


def label(scores: MatchScores) -> MatchLabel:
    if scores.s_overlap > POSITIVE_OVERLAP and scores.s_iou > POSITIVE_IOU:
        value = MatchLabelValue.POSITIVE
    elif scores.s_overlap < NEGATIVE_OVERLAP or scores.s_iou < NEGATIVE_IOU:
        value = MatchLabelValue.NEGATIVE
    else:
        value = MatchLabelValue.IGNORED
    return MatchLabel(value=value, scores=scores)


def frame_targets(tube: Tube, gt: GroundTruth) -> FrameTargets:
    """Per-frame classification and boundary-regression targets for a tube."""
    if len(_intersection(tube, gt)) == 0:
        raise MalformedInputError(
            "tube and ground truth share no frames; no positive frames to target"
        )
    cls = []
    reg: list[Optional[tuple[int, int]]] = []
    for f in tube.frames():
        inside = gt.start_frame <= f <= gt.end_frame
        cls.append(1 if inside else 0)
        reg.append((f - gt.start_frame, gt.end_frame - f) if inside else None)
    return FrameTargets(cls=tuple(cls), reg=tuple(reg))


def viou(tube: Tube, gt: GroundTruth) -> float:
    """Sum of box IoU over shared frames, normalized by the union frame count."""
    inter = _intersection(tube, gt)
    union = tube.num_frames + gt.num_frames - len(inter)
    if len(inter) == 0:
        return 0.0
    total = sum(iou(tube.box_at(f), gt.box_at(f)) for f in inter)
    return total / union


@dataclass(frozen=True)
class EvaluationReport:
    per_query: tuple[tuple[str, float], ...]
    mean_viou: float
    viou_at: dict[float, float]
    evaluated: int
    missing: int

    def as_dict(self) -> dict:
        return {
            "per_query": [{"query_id": q, "viou": v} for q, v in self.per_query],
            "mean_viou": self.mean_viou,
            "mean_viou_4dp": f"{self.mean_viou:.4f}",
            "viou_at": {f"{k:g}": v for k, v in sorted(self.viou_at.items())},
            "counts": {"evaluated": self.evaluated, "missing": self.missing},
        }


def evaluate_dataset(
    predictions: Mapping[str, Tube],
    gts: Mapping[str, GroundTruth] | Sequence[tuple[str, GroundTruth]],
    thresholds: tuple[float, ...] = (0.3, 0.5),
) -> EvaluationReport:
    """Mean vIoU and threshold accuracies over all ground-truth queries.

    Queries without a prediction score 0.  ``viou_at`` accuracies count
    queries with vIoU >= threshold; they are companion metrics, not part of
    the core measure.
    """
    if not isinstance(gts, Mapping):
        pairs = list(gts)
        query_ids = [q for q, _ in pairs]
        if len(set(query_ids)) != len(query_ids):
            raise MalformedInputError("duplicate query ids in ground truth")
        gts = dict(pairs)
    query_ids = list(gts.keys())
    per_query = []
    missing = 0
    for qid in sorted(query_ids):
        if qid in predictions:
            per_query.append((qid, viou(predictions[qid], gts[qid])))
        else:
            missing += 1
            per_query.append((qid, 0.0))
    n = len(per_query)
    mean = sum(v for _, v in per_query) / n if n else 0.0
    viou_at = {
        t: (sum(1 for _, v in per_query if v >= t) / n if n else 0.0) for t in thresholds
    }
    return EvaluationReport(
        per_query=tuple(per_query),
        mean_viou=mean,
        viou_at=viou_at,
        evaluated=n - missing,
        missing=missing,
    )
