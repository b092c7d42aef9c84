"""Content-based scene cut detection over per-frame HSV histograms.

The content delta between consecutive frames is the mean, over the hue /
saturation / value channels, of the L1 distance between the normalized
histograms, scaled to [0, 100] (each channel sums to one, so the raw L1
distance lives in [0, 2] and is multiplied by 50).  A cut is placed before a
frame whenever its delta exceeds the threshold, unless the cut would fall
closer than ``min_clip_len`` frames to the previous cut.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, MalformedInputError

HIST_SUM_TOL = 1e-6
DEFAULT_THRESHOLD = 27.0
DEFAULT_MIN_CLIP_LEN = 15


@dataclass(frozen=True)
class FrameHistogram:
    """Normalized HSV histograms for one frame; each channel sums to 1."""

    frame_index: int
    hue: np.ndarray
    saturation: np.ndarray
    value: np.ndarray

    def __post_init__(self) -> None:
        for name in ("hue", "saturation", "value"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise MalformedInputError(f"channel '{name}' must be a non-empty 1-D array")
            if np.any(arr < 0.0) or np.any(arr > 1.0):
                raise MalformedInputError(f"channel '{name}' has bins outside [0,1]")
            total = float(arr.sum())
            if abs(total - 1.0) > HIST_SUM_TOL:
                raise MalformedInputError(
                    f"channel '{name}' sums to {total:.8f}, expected 1 within {HIST_SUM_TOL}"
                )
            object.__setattr__(self, name, arr)

    def channels(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.hue, self.saturation, self.value)


@dataclass(frozen=True)
class Clip:
    """Inclusive frame range [start_frame, end_frame] of one scene."""

    clip_id: int
    start_frame: int
    end_frame: int

    def __post_init__(self) -> None:
        if self.start_frame > self.end_frame:
            raise MalformedInputError(
                f"clip {self.clip_id}: start {self.start_frame} > end {self.end_frame}"
            )

    @property
    def num_frames(self) -> int:
        return self.end_frame - self.start_frame + 1

    def contains(self, frame: int) -> bool:
        return self.start_frame <= frame <= self.end_frame


def content_delta(a: FrameHistogram, b: FrameHistogram) -> float:
    """Mean per-channel L1 histogram distance, scaled to [0, 100]."""
    deltas = []
    for ca, cb in zip(a.channels(), b.channels()):
        if ca.shape != cb.shape:
            raise MalformedInputError(
                f"histogram bin counts differ between frames {a.frame_index} and {b.frame_index}"
            )
        deltas.append(float(np.abs(ca - cb).sum()))
    return (sum(deltas) / 3.0) * 50.0


def detect_scenes(
    histograms: list[FrameHistogram],
    threshold: float = DEFAULT_THRESHOLD,
    min_clip_len: int = DEFAULT_MIN_CLIP_LEN,
) -> list[Clip]:
    """Partition the frame range into clips at content-delta cuts.

    The returned clips are disjoint, ordered, and tile the full frame range of
    the input.  Cuts are suppressed while they fall within ``min_clip_len``
    frames of the previous cut (the start of the video counts as a cut).
    """
    if not histograms:
        raise EmptyInputError("histogram sequence is empty")
    if threshold <= 0:
        raise MalformedInputError(f"threshold must be > 0, got {threshold}")
    if min_clip_len < 1:
        raise MalformedInputError(f"min_clip_len must be >= 1, got {min_clip_len}")

    first = histograms[0].frame_index
    for offset, hist in enumerate(histograms):
        if hist.frame_index != first + offset:
            raise MalformedInputError(
                f"frame indices not contiguous: expected {first + offset}, "
                f"got {hist.frame_index}"
            )

    cuts: list[int] = []  # frame indices each starting a new clip
    last_cut = first
    for prev, cur in zip(histograms, histograms[1:]):
        if content_delta(prev, cur) > threshold and cur.frame_index - last_cut >= min_clip_len:
            cuts.append(cur.frame_index)
            last_cut = cur.frame_index

    starts = [first] + cuts
    ends = [c - 1 for c in cuts] + [histograms[-1].frame_index]
    return [
        Clip(clip_id=i, start_frame=s, end_frame=e)
        for i, (s, e) in enumerate(zip(starts, ends))
    ]
