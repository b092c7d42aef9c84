"""Synthetic end-to-end fixtures: persons on linear trajectories, scene
palettes, and noisy detections, all deterministic per seed.

A fixture stands in for a decoded video.  Each person walks through
piecewise-linear waypoints with a fixed box size; the ground truth is the
exact trajectory.  Detections are the trajectory boxes with optional
Gaussian jitter, random drops and false positives.  Histograms are one-hot
palettes that change at the configured scene cuts, and each person gets a
query sentence built from its attributes so the parser can recover them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .boxes import BoundingBox, Detection
from .errors import MalformedInputError
from .grounding import GroundTruth
from .scene_split import FrameHistogram
from .text_attributes import ClothingColor, ClothingType, Gender

HIST_BINS = 16
TRUE_DETECTION_CONF = 0.9

_GENDER_WORD = {Gender.MALE: "man", Gender.FEMALE: "woman", Gender.UNKNOWN: "person"}
_GARMENT_WORD = {
    ClothingType.TOP: "shirt",
    ClothingType.BOTTOM: "pants",
    ClothingType.CLOTH: "dress",
}


@dataclass(frozen=True)
class PersonSpec:
    """One person: attribute labels, frame span, waypoints and box size.

    ``waypoints`` are (frame, cx, cy) with strictly increasing frames inside
    the span; positions between waypoints are linearly interpolated and held
    constant before the first / after the last waypoint.
    """

    person_id: str
    gender: Gender
    color: ClothingColor
    clothing: ClothingType
    start_frame: int
    end_frame: int
    waypoints: tuple[tuple[int, float, float], ...]
    width: float
    height: float

    def __post_init__(self) -> None:
        if not self.person_id:
            raise MalformedInputError("person_id must be non-empty")
        if self.start_frame < 0 or self.end_frame < self.start_frame:
            raise MalformedInputError(
                f"person {self.person_id}: bad span "
                f"[{self.start_frame}, {self.end_frame}]"
            )
        if not self.waypoints:
            raise MalformedInputError(f"person {self.person_id}: needs at least one waypoint")
        frames = [w[0] for w in self.waypoints]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise MalformedInputError(
                f"person {self.person_id}: waypoint frames must strictly increase"
            )
        if frames[0] < self.start_frame or frames[-1] > self.end_frame:
            raise MalformedInputError(
                f"person {self.person_id}: waypoints outside span"
            )
        if not (self.width > 0 and self.height > 0):
            raise MalformedInputError(
                f"person {self.person_id}: width/height must be positive"
            )

    def center_at(self, frame: int) -> tuple[float, float]:
        if not self.start_frame <= frame <= self.end_frame:
            raise MalformedInputError(
                f"person {self.person_id}: frame {frame} outside span"
            )
        pts = self.waypoints
        if frame <= pts[0][0]:
            return pts[0][1], pts[0][2]
        if frame >= pts[-1][0]:
            return pts[-1][1], pts[-1][2]
        for (f0, x0, y0), (f1, x1, y1) in zip(pts, pts[1:]):
            if f0 <= frame <= f1:
                t = (frame - f0) / (f1 - f0)
                return x0 + t * (x1 - x0), y0 + t * (y1 - y0)
        raise AssertionError("unreachable: waypoints cover the span")

    def box_at(self, frame: int) -> BoundingBox:
        cx, cy = self.center_at(frame)
        return BoundingBox(
            cx - self.width / 2.0,
            cy - self.height / 2.0,
            cx + self.width / 2.0,
            cy + self.height / 2.0,
        )


@dataclass(frozen=True)
class NoiseSpec:
    jitter_std: float = 0.0
    drop_prob: float = 0.0
    false_positive_rate: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.jitter_std) and self.jitter_std >= 0):
            raise MalformedInputError(f"jitter_std must be >= 0, got {self.jitter_std}")
        for name in ("drop_prob", "false_positive_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise MalformedInputError(f"{name} must be in [0,1], got {v}")


@dataclass(frozen=True)
class FixtureSpec:
    num_frames: int
    frame_width: int = 320
    frame_height: int = 240
    scene_cuts: tuple[int, ...] = ()
    persons: tuple[PersonSpec, ...] = ()
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_frames < 1:
            raise MalformedInputError(f"num_frames must be >= 1, got {self.num_frames}")
        if self.frame_width < 1 or self.frame_height < 1:
            raise MalformedInputError("frame dimensions must be positive")
        cuts = list(self.scene_cuts)
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise MalformedInputError("scene_cuts must strictly increase")
        if any(c < 1 or c > self.num_frames - 1 for c in cuts):
            raise MalformedInputError(
                f"scene_cuts must lie in [1, {self.num_frames - 1}]"
            )
        ids = [p.person_id for p in self.persons]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise MalformedInputError(f"overlapping person ids: {dupes}")
        for p in self.persons:
            if p.end_frame > self.num_frames - 1:
                raise MalformedInputError(
                    f"person {p.person_id}: span ends past frame {self.num_frames - 1}"
                )
            for f, cx, cy in p.waypoints:
                if not (
                    0.0 <= cx - p.width / 2.0
                    and cx + p.width / 2.0 <= self.frame_width
                    and 0.0 <= cy - p.height / 2.0
                    and cy + p.height / 2.0 <= self.frame_height
                ):
                    raise MalformedInputError(
                        f"person {p.person_id}: waypoint at frame {f} puts the box "
                        "outside the frame"
                    )


@dataclass(frozen=True)
class Query:
    query_id: str
    sentence: str
    gt: GroundTruth


@dataclass(frozen=True)
class Fixture:
    spec: FixtureSpec
    histograms: tuple[FrameHistogram, ...]
    detections: tuple[Detection, ...]
    queries: tuple[Query, ...]


def _one_hot(bin_index: int) -> np.ndarray:
    h = np.zeros(HIST_BINS, dtype=np.float64)
    h[bin_index % HIST_BINS] = 1.0
    return h


def _scene_of(frame: int, cuts: tuple[int, ...]) -> int:
    scene = 0
    for c in cuts:
        if frame >= c:
            scene += 1
    return scene


def person_sentence(persons: tuple[PersonSpec, ...], subject_index: int) -> str:
    """Sentence describing the subject first, then every other person."""
    phrases = []
    order = [persons[subject_index]] + [
        p for i, p in enumerate(persons) if i != subject_index
    ]
    for p in order:
        noun = _GENDER_WORD[p.gender]
        if p.clothing is ClothingType.UNKNOWN:
            phrases.append(f"the {noun}")
        else:
            garment = _GARMENT_WORD[p.clothing]
            if p.color is ClothingColor.UNKNOWN:
                phrases.append(f"the {noun} in a {garment}")
            else:
                phrases.append(f"the {noun} in a {p.color.value} {garment}")
    sentence = phrases[0].capitalize()
    if len(phrases) > 1:
        sentence += " walks past " + " and ".join(phrases[1:])
    else:
        sentence += " walks around"
    return sentence + "."


def _embeddings(n_persons: int) -> list[np.ndarray]:
    dim = max(4, n_persons)
    return [np.eye(dim, dtype=np.float64)[i] for i in range(n_persons)]


def make_fixture(spec: FixtureSpec) -> Fixture:
    """Render a fixture spec into histograms, detections and queries."""
    rng = np.random.default_rng(spec.seed)
    embeddings = _embeddings(len(spec.persons))
    emb_dim = embeddings[0].shape[0] if embeddings else 4

    histograms = []
    for f in range(spec.num_frames):
        bins = _one_hot(3 * _scene_of(f, spec.scene_cuts))
        histograms.append(
            FrameHistogram(frame_index=f, hue=bins, saturation=bins, value=bins)
        )

    detections: list[Detection] = []
    noise = spec.noise
    for f in range(spec.num_frames):
        for idx, person in enumerate(spec.persons):
            if not person.start_frame <= f <= person.end_frame:
                continue
            if rng.uniform() < noise.drop_prob:
                continue
            cx, cy = person.center_at(f)
            jit = noise.jitter_std * rng.standard_normal(4)
            w = max(person.width + jit[2], 1.0)
            h = max(person.height + jit[3], 1.0)
            cx, cy = cx + jit[0], cy + jit[1]
            detections.append(
                Detection(
                    frame_index=f,
                    box=BoundingBox(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0),
                    confidence=TRUE_DETECTION_CONF,
                    embedding=embeddings[idx],
                )
            )
        if rng.uniform() < noise.false_positive_rate:
            w = rng.uniform(10.0, max(11.0, 0.2 * spec.frame_width))
            h = rng.uniform(10.0, max(11.0, 0.2 * spec.frame_height))
            cx = rng.uniform(0.1 * spec.frame_width, 0.9 * spec.frame_width)
            cy = rng.uniform(0.1 * spec.frame_height, 0.9 * spec.frame_height)
            conf = rng.uniform(0.45, 0.75)
            raw = rng.standard_normal(emb_dim)
            detections.append(
                Detection(
                    frame_index=f,
                    box=BoundingBox(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0),
                    confidence=float(conf),
                    embedding=raw / np.linalg.norm(raw),
                )
            )

    queries = []
    for idx, person in enumerate(spec.persons):
        boxes = tuple(person.box_at(f) for f in range(person.start_frame, person.end_frame + 1))
        gt = GroundTruth(
            start_frame=person.start_frame, end_frame=person.end_frame, boxes=boxes
        )
        queries.append(
            Query(
                query_id=person.person_id,
                sentence=person_sentence(spec.persons, idx),
                gt=gt,
            )
        )

    return Fixture(
        spec=spec,
        histograms=tuple(histograms),
        detections=tuple(detections),
        queries=tuple(queries),
    )


def _require(d: dict, key: str, where: str) -> Any:
    if key not in d:
        raise MalformedInputError(f"{where}: missing field '{key}'")
    return d[key]


def spec_from_dict(d: dict) -> FixtureSpec:
    """Build a FixtureSpec from parsed JSON, naming the offending field on error."""
    if not isinstance(d, dict):
        raise MalformedInputError("fixture spec must be a JSON object")
    unknown = set(d) - {
        "schema_version",
        "num_frames",
        "frame_width",
        "frame_height",
        "scene_cuts",
        "persons",
        "noise",
        "seed",
    }
    if unknown:
        raise MalformedInputError(f"fixture spec: unknown fields {sorted(unknown)}")
    version = str(d.get("schema_version", "1"))
    if version != "1":
        raise MalformedInputError(
            f"fixture spec: unsupported schema_version {version!r} (expected '1')"
        )

    persons = []
    for i, pd in enumerate(d.get("persons", [])):
        where = f"persons[{i}]"
        try:
            gender = Gender(_require(pd, "gender", where))
            color = ClothingColor(pd.get("color", "unknown"))
            clothing = ClothingType(pd.get("clothing", "unknown"))
        except ValueError as exc:
            raise MalformedInputError(f"{where}: {exc}") from exc
        persons.append(
            PersonSpec(
                person_id=str(_require(pd, "person_id", where)),
                gender=gender,
                color=color,
                clothing=clothing,
                start_frame=int(_require(pd, "start_frame", where)),
                end_frame=int(_require(pd, "end_frame", where)),
                waypoints=tuple(
                    (int(w[0]), float(w[1]), float(w[2]))
                    for w in _require(pd, "waypoints", where)
                ),
                width=float(_require(pd, "width", where)),
                height=float(_require(pd, "height", where)),
            )
        )

    nd = d.get("noise", {})
    noise = NoiseSpec(
        jitter_std=float(nd.get("jitter_std", 0.0)),
        drop_prob=float(nd.get("drop_prob", 0.0)),
        false_positive_rate=float(nd.get("false_positive_rate", 0.0)),
    )
    return FixtureSpec(
        num_frames=int(_require(d, "num_frames", "fixture spec")),
        frame_width=int(d.get("frame_width", 320)),
        frame_height=int(d.get("frame_height", 240)),
        scene_cuts=tuple(int(c) for c in d.get("scene_cuts", [])),
        persons=tuple(persons),
        noise=noise,
        seed=int(d.get("seed", 0)),
    )


def spec_to_dict(spec: FixtureSpec) -> dict:
    return {
        "schema_version": "1",
        "num_frames": spec.num_frames,
        "frame_width": spec.frame_width,
        "frame_height": spec.frame_height,
        "scene_cuts": list(spec.scene_cuts),
        "persons": [
            {
                "person_id": p.person_id,
                "gender": p.gender.value,
                "color": p.color.value,
                "clothing": p.clothing.value,
                "start_frame": p.start_frame,
                "end_frame": p.end_frame,
                "waypoints": [[f, cx, cy] for f, cx, cy in p.waypoints],
                "width": p.width,
                "height": p.height,
            }
            for p in spec.persons
        ],
        "noise": {
            "jitter_std": spec.noise.jitter_std,
            "drop_prob": spec.noise.drop_prob,
            "false_positive_rate": spec.noise.false_positive_rate,
        },
        "seed": spec.seed,
    }
