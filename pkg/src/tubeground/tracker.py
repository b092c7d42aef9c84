"""Frame-to-frame association of detections into tube proposals within a clip.

Each track carries a constant-velocity Kalman belief and a running mean of
the appearance embeddings of its matched detections.  Per frame, all tracks
are predicted forward, a cost matrix against the frame's detections is built
(appearance distance blended with IoU distance, or pure IoU distance when
embeddings are absent), and a gated minimum-cost assignment decides matches.
Tracks start tentative and must hit ``n_init`` consecutive frames before they
are confirmed; confirmed tracks survive up to ``max_age`` consecutive missed
frames, with the missed frames filled by the predicted box so emitted tubes
stay frame-contiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assignment import assign
from .boxes import BoundingBox, Detection, iou, nms
from .errors import MalformedInputError
from .kalman import KalmanParams, KalmanState, initiate, kalman_predict, kalman_update
from .scene_split import Clip


@dataclass(frozen=True)
class TrackerConfig:
    max_age: int = 30
    n_init: int = 3
    max_cost: float = 0.7
    appearance_weight: float = 0.5  # blend between appearance and IoU distance
    apply_nms: bool = True
    nms_conf_threshold: float = 0.4
    nms_iou_threshold: float = 0.65
    kalman: KalmanParams = field(default_factory=KalmanParams)


@dataclass(frozen=True)
class Tube:
    """One tracked person within a clip: one box per frame over a contiguous span."""

    tube_id: int
    clip_id: int
    entries: tuple[tuple[int, BoundingBox], ...]
    mean_embedding: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not self.entries:
            raise MalformedInputError(f"tube {self.tube_id} has no entries")
        frames = [f for f, _ in self.entries]
        for prev, cur in zip(frames, frames[1:]):
            if cur != prev + 1:
                raise MalformedInputError(
                    f"tube {self.tube_id} frames not contiguous at {prev} -> {cur}"
                )

    @property
    def start_frame(self) -> int:
        return self.entries[0][0]

    @property
    def end_frame(self) -> int:
        return self.entries[-1][0]

    @property
    def num_frames(self) -> int:
        return len(self.entries)

    def frames(self) -> range:
        return range(self.start_frame, self.end_frame + 1)

    def box_at(self, frame: int) -> BoundingBox:
        return self.entries[frame - self.start_frame][1]

    def boxes(self) -> list[BoundingBox]:
        return [b for _, b in self.entries]


class _Track:
    """Mutable per-track state while a clip is being processed."""

    def __init__(self, track_id: int, detection: Detection, params: KalmanParams):
        self.track_id = track_id
        self.state: KalmanState = initiate(detection.box, params)
        self.entries: list[tuple[int, BoundingBox, bool]] = [
            (detection.frame_index, detection.box, True)
        ]
        self.hits = 1
        self.time_since_update = 0
        self.confirmed = False
        self._emb_sum: Optional[np.ndarray] = (
            detection.embedding.copy() if detection.embedding is not None else None
        )
        self._emb_count = 1 if detection.embedding is not None else 0

    @property
    def mean_embedding(self) -> Optional[np.ndarray]:
        if self._emb_sum is None or self._emb_count == 0:
            return None
        mean = self._emb_sum / self._emb_count
        norm = float(np.linalg.norm(mean))
        if norm == 0.0:
            return None
        return mean / norm

    def predict(self, params: KalmanParams) -> None:
        self.state = kalman_predict(self.state, params)

    def update(self, detection: Detection, params: KalmanParams) -> None:
        self.state = kalman_update(self.state, detection.box, params)
        self.entries.append((detection.frame_index, detection.box, True))
        self.hits += 1
        self.time_since_update = 0
        if detection.embedding is not None:
            if self._emb_sum is None:
                self._emb_sum = detection.embedding.copy()
            else:
                self._emb_sum = self._emb_sum + detection.embedding
            self._emb_count += 1

    def mark_missed(self, frame_index: int) -> None:
        self.time_since_update += 1
        # Keep the tube contiguous: the predicted box stands in for the
        # missing detection and is trimmed again if the track dies.
        self.entries.append((frame_index, self.state.box(), False))

    def to_tube(self, clip_id: int) -> Optional[Tube]:
        if not self.confirmed:
            return None
        entries = list(self.entries)
        while entries and not entries[-1][2]:
            entries.pop()
        if not entries:
            return None
        return Tube(
            tube_id=self.track_id,
            clip_id=clip_id,
            entries=tuple((f, b) for f, b, _ in entries),
            mean_embedding=self.mean_embedding,
        )


def _cost_matrix(
    tracks: list[_Track], detections: list[Detection], config: TrackerConfig
) -> np.ndarray:
    cost = np.zeros((len(tracks), len(detections)))
    for i, track in enumerate(tracks):
        predicted = track.state.box()
        track_emb = track.mean_embedding
        for j, det in enumerate(detections):
            iou_dist = 1.0 - iou(predicted, det.box)
            if track_emb is not None and det.embedding is not None:
                app_dist = 1.0 - float(np.dot(track_emb, det.embedding))
                app_dist = min(max(app_dist, 0.0), 2.0)
                w = config.appearance_weight
                cost[i, j] = w * app_dist + (1.0 - w) * iou_dist
            else:
                cost[i, j] = iou_dist
    return cost


def track_clip(
    clip: Clip,
    detections_by_frame: dict[int, list[Detection]],
    config: TrackerConfig = TrackerConfig(),
) -> list[Tube]:
    """Link one clip's per-frame detections into tube proposals.

    ``detections_by_frame`` maps frame index to that frame's detections; all
    frames must lie inside the clip.  Returns confirmed tubes ordered by
    tube id (ids are assigned in creation order, so output is deterministic).
    """
    for frame in detections_by_frame:
        if not clip.contains(frame):
            raise MalformedInputError(
                f"detection frame {frame} outside clip {clip.clip_id} "
                f"range [{clip.start_frame}, {clip.end_frame}]"
            )

    active: list[_Track] = []
    finished: list[_Track] = []
    next_id = 0

    for frame in range(clip.start_frame, clip.end_frame + 1):
        dets = detections_by_frame.get(frame, [])
        if config.apply_nms:
            dets = nms(dets, config.nms_conf_threshold, config.nms_iou_threshold)

        for track in active:
            track.predict(config.kalman)

        if active and dets:
            result = assign(_cost_matrix(active, dets, config), gate=config.max_cost)
            matched_tracks = {r for r, _ in result.matches}
            matched_dets = {c for _, c in result.matches}
            for r, c in result.matches:
                active[r].update(dets[c], config.kalman)
        else:
            matched_tracks = set()
            matched_dets = set()

        survivors: list[_Track] = []
        for idx, track in enumerate(active):
            if idx in matched_tracks:
                if not track.confirmed and track.hits >= config.n_init:
                    track.confirmed = True
                survivors.append(track)
                continue
            if not track.confirmed:
                continue  # tentative track lost before confirmation: drop
            track.mark_missed(frame)
            if track.time_since_update > config.max_age:
                finished.append(track)
            else:
                survivors.append(track)
        active = survivors

        for j, det in enumerate(dets):
            if j in matched_dets:
                continue
            track = _Track(next_id, det, config.kalman)
            if config.n_init <= 1:
                track.confirmed = True
            active.append(track)
            next_id += 1

    finished.extend(active)
    tubes = [t for t in (track.to_tube(clip.clip_id) for track in finished) if t is not None]
    tubes.sort(key=lambda t: t.tube_id)
    return tubes
