"""Axis-aligned boxes, per-frame detections, IoU and non-maximum suppression."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import MalformedInputError

EMBEDDING_NORM_TOL = 1e-6


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in image coordinates, corners (x1, y1) top-left and (x2, y2) bottom-right."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise MalformedInputError(f"box coordinates must be finite, got {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise MalformedInputError(f"degenerate box: {coords}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    def to_cah(self) -> tuple[float, float, float, float]:
        """(cx, cy, aspect, height) with aspect = width / height."""
        cx, cy = self.center
        return (cx, cy, self.width / self.height, self.height)

    @staticmethod
    def from_cah(cx: float, cy: float, aspect: float, height: float) -> "BoundingBox":
        width = aspect * height
        return BoundingBox(cx - width / 2, cy - height / 2, cx + width / 2, cy + height / 2)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class Detection:
    """One detector output: a box in a single frame with confidence and optional appearance embedding."""

    frame_index: int
    box: BoundingBox
    confidence: float
    embedding: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise MalformedInputError(f"confidence must be in [0,1], got {self.confidence}")
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=np.float64)
            norm = float(np.linalg.norm(emb))
            if abs(norm - 1.0) > EMBEDDING_NORM_TOL:
                raise MalformedInputError(
                    f"embedding must be unit-norm (|e|={norm:.8f}) at frame {self.frame_index}"
                )
            object.__setattr__(self, "embedding", emb)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0.0 when disjoint."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def nms(
    detections: Sequence[Detection],
    conf_threshold: float,
    iou_threshold: float,
) -> list[Detection]:
    """Greedy non-maximum suppression over one frame's detections.

    Detections below ``conf_threshold`` are dropped, then boxes are visited in
    descending confidence order and any box overlapping an already-kept box
    with IoU > ``iou_threshold`` is suppressed.  Output is sorted by descending
    confidence.  Confidence ties are broken by input order so results are
    deterministic.
    """
    frames = {d.frame_index for d in detections}
    if len(frames) > 1:
        raise MalformedInputError(f"nms expects one frame, got frames {sorted(frames)}")
    candidates = [d for d in detections if d.confidence >= conf_threshold]
    candidates.sort(key=lambda d: -d.confidence)
    kept: list[Detection] = []
    for det in candidates:
        if all(iou(det.box, k.box) <= iou_threshold for k in kept):
            kept.append(det)
    return kept
