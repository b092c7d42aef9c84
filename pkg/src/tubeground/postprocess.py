"""Cleanup of raw tube proposals: duplicate removal, reconnection, smoothing.

All transforms are pure per-clip functions.  Duplicate removal deletes the
shorter of two tubes that overlap heavily in time and space; reconnection
merges a tube that is ending with one that is starting when their junction
boxes agree, iterating until no pair merges; smoothing convolves the box
trajectory with a truncated Gaussian kernel renormalized at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxes import BoundingBox, iou
from .errors import MalformedInputError
from .text_attributes import SentenceAttributes
from .tracker import Tube


@dataclass(frozen=True)
class PostprocessConfig:
    dup_time_overlap_min: float = 0.8
    dup_iou_min: float = 0.7
    reconnect_overlap_max_frames: int = 10
    reconnect_iou_min: float = 0.5
    smooth_sigma: float = 1.0
    smooth_radius: int = 2

    def __post_init__(self) -> None:
        for name in ("dup_time_overlap_min", "dup_iou_min", "reconnect_iou_min"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise MalformedInputError(f"{name} must be in [0,1], got {v}")
        if self.smooth_radius < 1:
            raise MalformedInputError(f"smooth_radius must be >= 1, got {self.smooth_radius}")
        if self.smooth_sigma <= 0:
            raise MalformedInputError(f"smooth_sigma must be > 0, got {self.smooth_sigma}")
        if self.reconnect_overlap_max_frames < 0:
            raise MalformedInputError("reconnect_overlap_max_frames must be >= 0")


def _overlap_range(a: Tube, b: Tube) -> tuple[int, int]:
    return (max(a.start_frame, b.start_frame), min(a.end_frame, b.end_frame))


def _mean_overlap_iou(a: Tube, b: Tube) -> float:
    lo, hi = _overlap_range(a, b)
    if lo > hi:
        return 0.0
    values = [iou(a.box_at(f), b.box_at(f)) for f in range(lo, hi + 1)]
    return sum(values) / len(values)


def dedup(tubes: list[Tube], cfg: PostprocessConfig) -> list[Tube]:
    """Delete tubes that duplicate a longer tube in both time and space.

    A tube dies when a longer (or equal-length, earlier-id) tube covers at
    least ``dup_time_overlap_min`` of its frames with mean per-frame IoU of at
    least ``dup_iou_min`` over the shared frames.
    """
    ordered = sorted(tubes, key=lambda t: (-t.num_frames, t.tube_id))
    kept: list[Tube] = []
    for tube in ordered:
        duplicate = False
        for longer in kept:
            lo, hi = _overlap_range(tube, longer)
            overlap = max(0, hi - lo + 1)
            if overlap / tube.num_frames >= cfg.dup_time_overlap_min and (
                _mean_overlap_iou(tube, longer) >= cfg.dup_iou_min
            ):
                duplicate = True
                break
        if not duplicate:
            kept.append(tube)
    kept.sort(key=lambda t: t.tube_id)
    return kept


def _interpolate_box(a: BoundingBox, b: BoundingBox, t: float) -> BoundingBox:
    return BoundingBox(
        a.x1 + (b.x1 - a.x1) * t,
        a.y1 + (b.y1 - a.y1) * t,
        a.x2 + (b.x2 - a.x2) * t,
        a.y2 + (b.y2 - a.y2) * t,
    )


def _junction_iou(a: Tube, b: Tube) -> float:
    lo, hi = _overlap_range(a, b)
    if lo <= hi:
        return _mean_overlap_iou(a, b)
    return iou(a.entries[-1][1], b.entries[0][1])


def _merge_pair(a: Tube, b: Tube) -> Tube:
    """Merge tube ``a`` (earlier) with tube ``b`` (later) into one span."""
    entries: list[tuple[int, BoundingBox]] = []
    if b.start_frame > a.end_frame:
        entries.extend(a.entries)
        gap = b.start_frame - a.end_frame - 1
        last, first = a.entries[-1][1], b.entries[0][1]
        for k in range(1, gap + 1):
            t = k / (gap + 1)
            entries.append((a.end_frame + k, _interpolate_box(last, first, t)))
        entries.extend(b.entries)
    else:
        mid = (b.start_frame + a.end_frame) // 2
        entries.extend(e for e in a.entries if e[0] <= mid)
        entries.extend(e for e in b.entries if e[0] > mid)

    emb = None
    if a.mean_embedding is not None and b.mean_embedding is not None:
        mix = a.num_frames * a.mean_embedding + b.num_frames * b.mean_embedding
        norm = float(np.linalg.norm(mix))
        emb = mix / norm if norm > 0 else None
    return Tube(
        tube_id=min(a.tube_id, b.tube_id),
        clip_id=a.clip_id,
        entries=tuple(entries),
        mean_embedding=emb,
    )


def reconnect(tubes: list[Tube], cfg: PostprocessConfig) -> list[Tube]:
    """Merge tube pairs whose junction is short and spatially consistent.

    Candidates are ordered pairs (A, B) with A starting and ending before B,
    whose temporal overlap or gap at the junction is at most
    ``reconnect_overlap_max_frames`` frames and whose junction IoU (mean IoU
    over shared frames, or IoU of A's last and B's first box across a gap)
    reaches ``reconnect_iou_min``.  Gap frames are filled by linear
    interpolation; overlaps are split at their midpoint.  Merging repeats
    until no pair qualifies.
    """
    current = sorted(tubes, key=lambda t: (t.start_frame, t.end_frame, t.tube_id))
    merged = True
    while merged:
        merged = False
        for i in range(len(current)):
            for j in range(len(current)):
                if i == j:
                    continue
                a, b = current[i], current[j]
                if not (a.start_frame < b.start_frame and a.end_frame < b.end_frame):
                    continue
                overlap = max(0, a.end_frame - b.start_frame + 1)
                gap = max(0, b.start_frame - a.end_frame - 1)
                if overlap > cfg.reconnect_overlap_max_frames:
                    continue
                if gap > cfg.reconnect_overlap_max_frames:
                    continue
                if _junction_iou(a, b) < cfg.reconnect_iou_min:
                    continue
                replacement = _merge_pair(a, b)
                current = [t for k, t in enumerate(current) if k not in (i, j)]
                current.append(replacement)
                current.sort(key=lambda t: (t.start_frame, t.end_frame, t.tube_id))
                merged = True
                break
            if merged:
                break
    current.sort(key=lambda t: t.tube_id)
    return current


def smooth(tube: Tube, cfg: PostprocessConfig) -> Tube:
    """Gaussian-smooth the (cx, cy, w, h) trajectory of a tube.

    The kernel is a normalized Gaussian truncated at ``smooth_radius``; at the
    tube ends the kernel is renormalized over the frames that exist, so the
    span is unchanged and a constant trajectory passes through untouched.
    """
    n = tube.num_frames
    boxes = tube.boxes()
    signal = np.array(
        [[*b.center, b.width, b.height] for b in boxes], dtype=np.float64
    )  # n x 4

    r = cfg.smooth_radius
    offsets = np.arange(-r, r + 1)
    kernel = np.exp(-0.5 * (offsets / cfg.smooth_sigma) ** 2)

    out = np.empty_like(signal)
    for i in range(n):
        lo = max(0, i - r)
        hi = min(n - 1, i + r)
        w = kernel[(lo - i) + r : (hi - i) + r + 1]
        out[i] = (signal[lo : hi + 1] * w[:, None]).sum(axis=0) / w.sum()

    entries = []
    for (frame, _), (cx, cy, bw, bh) in zip(tube.entries, out):
        entries.append(
            (frame, BoundingBox(cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2))
        )
    return Tube(
        tube_id=tube.tube_id,
        clip_id=tube.clip_id,
        entries=tuple(entries),
        mean_embedding=tube.mean_embedding,
    )


def filter_candidates(
    tubes_by_clip: dict[int, list[Tube]], sentence_attrs: SentenceAttributes
) -> dict[int, list[Tube]]:
    """Drop single-tube clips when the description mentions several people.

    Testing-phase rule: a clip holding exactly one tube cannot ground a
    multi-person description, so its tubes are removed; everything else passes
    through unchanged.
    """
    if sentence_attrs.person_count <= 1:
        return {clip: list(tubes) for clip, tubes in tubes_by_clip.items()}
    return {
        clip: (list(tubes) if len(tubes) != 1 else [])
        for clip, tubes in tubes_by_clip.items()
    }


def clean_clip_tubes(tubes: list[Tube], cfg: PostprocessConfig) -> list[Tube]:
    """dedup -> reconnect -> smooth for one clip's tubes."""
    deduped = dedup(tubes, cfg)
    reconnected = reconnect(deduped, cfg)
    return [smooth(t, cfg) for t in reconnected]
