"""Artifact files: schema-checked JSON / JSON-lines readers and atomic writers.

Every single-document artifact carries a top-level ``schema_version``.
JSON-lines artifacts written by this package start with a header line
``{"schema_version": "1"}``; readers also accept headerless files (hand-made
inputs) and treat them as the current version.  All writes go through a
temp-file-then-rename so a crash never leaves a half-written artifact, and
serialization is plain ``json.dumps`` with fixed key order so identical data
produces identical bytes.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional

import numpy as np

from .boxes import BoundingBox, Detection
from .errors import MalformedInputError, SchemaError
from .grounding import EvaluationReport, GroundTruth
from .scene_split import Clip, FrameHistogram
from .text_attributes import (
    AttributeTriple,
    ClothingColor,
    ClothingType,
    Gender,
    SentenceAttributes,
)
from .tracker import Tube

SCHEMA_VERSION = "1"
HIST_FILE_BINS = 16


# ---------------------------------------------------------------------------
# primitives


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial data."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_doc(obj: dict) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _dump_lines(rows: Iterable[dict]) -> str:
    header = json.dumps({"schema_version": SCHEMA_VERSION})
    return "\n".join([header] + [json.dumps(r) for r in rows]) + "\n"


def _load_doc(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read file ({exc})") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: top level must be a JSON object")
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: field 'schema_version' is {version!r}, expected {SCHEMA_VERSION!r}"
        )
    return obj


def _iter_lines(path: str | Path) -> Iterator[tuple[str, dict]]:
    """Yield (context, object) per data line, skipping a version header line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read file ({exc})") from exc
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{path} line {n}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{where}: not valid JSON ({exc})") from exc
        if not isinstance(obj, dict):
            raise SchemaError(f"{where}: each line must be a JSON object")
        if set(obj) == {"schema_version"}:
            if obj["schema_version"] != SCHEMA_VERSION:
                raise SchemaError(
                    f"{where}: field 'schema_version' is {obj['schema_version']!r}, "
                    f"expected {SCHEMA_VERSION!r}"
                )
            continue
        yield where, obj


def load_document(path: str | Path) -> dict:
    """Read any single-document artifact, checking the schema version."""
    return _load_doc(path)


def _field(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{where}: missing field '{key}'")
    return obj[key]


def _int_field(obj: dict, key: str, where: str) -> int:
    v = _field(obj, key, where)
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}: field '{key}' must be an integer, got {v!r}")
    return v


def _str_field(obj: dict, key: str, where: str) -> str:
    v = _field(obj, key, where)
    if not isinstance(v, str):
        raise SchemaError(f"{where}: field '{key}' must be a string, got {v!r}")
    return v


def _float_list(v: Any, key: str, where: str) -> list[float]:
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) for x in v):
        raise SchemaError(f"{where}: field '{key}' must be a list of numbers")
    return [float(x) for x in v]


def _box(v: Any, key: str, where: str) -> BoundingBox:
    vals = _float_list(v, key, where)
    if len(vals) != 4:
        raise SchemaError(f"{where}: field '{key}' must be [x1, y1, x2, y2]")
    try:
        return BoundingBox(*vals)
    except MalformedInputError as exc:
        raise SchemaError(f"{where}: field '{key}': {exc}") from exc


def _box_json(b: BoundingBox) -> list[float]:
    return [b.x1, b.y1, b.x2, b.y2]


# ---------------------------------------------------------------------------
# sentences / attributes


def read_sentences(path: str | Path) -> list[tuple[str, str]]:
    """sentences.jsonl: one ``{"id", "sentence"}`` object per line."""
    out: list[tuple[str, str]] = []
    seen: set[str] = set()
    for where, obj in _iter_lines(path):
        qid = _str_field(obj, "id", where)
        if qid in seen:
            raise SchemaError(f"{where}: duplicate id {qid!r}")
        seen.add(qid)
        out.append((qid, _str_field(obj, "sentence", where)))
    return out


def write_sentences(path: str | Path, items: Iterable[tuple[str, str]]) -> None:
    rows = [{"id": qid, "sentence": s} for qid, s in items]
    atomic_write_text(path, _dump_lines(rows))


def write_attrs(
    path: str | Path, items: Iterable[tuple[str, str, SentenceAttributes]]
) -> None:
    """attrs.jsonl: the sentence line plus extracted triples and person_count."""
    rows = [
        {"id": qid, "sentence": sent, **attrs.as_dict()} for qid, sent, attrs in items
    ]
    atomic_write_text(path, _dump_lines(rows))


def read_attrs(path: str | Path) -> dict[str, SentenceAttributes]:
    out: dict[str, SentenceAttributes] = {}
    for where, obj in _iter_lines(path):
        qid = _str_field(obj, "id", where)
        if qid in out:
            raise SchemaError(f"{where}: duplicate id {qid!r}")
        raw_triples = _field(obj, "triples", where)
        if not isinstance(raw_triples, list):
            raise SchemaError(f"{where}: field 'triples' must be a list")
        triples = []
        for i, t in enumerate(raw_triples):
            if not isinstance(t, dict):
                raise SchemaError(f"{where}: triples[{i}] must be an object")
            try:
                span = t.get("span", [0, 0])
                triples.append(
                    AttributeTriple(
                        gender=Gender(_field(t, "gender", where)),
                        color=ClothingColor(_field(t, "color", where)),
                        clothing=ClothingType(_field(t, "clothing", where)),
                        mention_span=(int(span[0]), int(span[1])),
                    )
                )
            except (ValueError, TypeError, IndexError) as exc:
                raise SchemaError(f"{where}: triples[{i}]: {exc}") from exc
        attrs = SentenceAttributes(triples=tuple(triples))
        count = _int_field(obj, "person_count", where)
        if count != attrs.person_count:
            raise SchemaError(
                f"{where}: field 'person_count' is {count}, "
                f"but {attrs.person_count} triples are listed"
            )
        out[qid] = attrs
    return out


# ---------------------------------------------------------------------------
# histograms / clips


def write_histograms(path: str | Path, hists: Iterable[FrameHistogram]) -> None:
    rows = [
        {
            "frame": h.frame_index,
            "hue": h.hue.tolist(),
            "saturation": h.saturation.tolist(),
            "value": h.value.tolist(),
        }
        for h in hists
    ]
    atomic_write_text(path, _dump_lines(rows))


def read_histograms(path: str | Path) -> list[FrameHistogram]:
    """hists.jsonl: per frame, three normalized 16-bin channel histograms."""
    out = []
    for where, obj in _iter_lines(path):
        frame = _int_field(obj, "frame", where)
        channels = {}
        for key in ("hue", "saturation", "value"):
            vals = _float_list(_field(obj, key, where), key, where)
            if len(vals) != HIST_FILE_BINS:
                raise SchemaError(
                    f"{where}: field '{key}' must have {HIST_FILE_BINS} bins, "
                    f"got {len(vals)}"
                )
            channels[key] = np.array(vals)
        try:
            out.append(FrameHistogram(frame_index=frame, **channels))
        except MalformedInputError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    return out


def write_clips(path: str | Path, clips: Iterable[Clip]) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "clips": [
            {"clip_id": c.clip_id, "start_frame": c.start_frame, "end_frame": c.end_frame}
            for c in clips
        ],
    }
    atomic_write_text(path, _dump_doc(doc))


def read_clips(path: str | Path) -> list[Clip]:
    doc = _load_doc(path)
    where = str(path)
    raw = _field(doc, "clips", where)
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: field 'clips' must be a list")
    clips = []
    for i, c in enumerate(raw):
        w = f"{where} clips[{i}]"
        try:
            clips.append(
                Clip(
                    clip_id=_int_field(c, "clip_id", w),
                    start_frame=_int_field(c, "start_frame", w),
                    end_frame=_int_field(c, "end_frame", w),
                )
            )
        except MalformedInputError as exc:
            raise SchemaError(f"{w}: {exc}") from exc
    return clips


# ---------------------------------------------------------------------------
# detections / tubes


def write_detections(path: str | Path, dets: Iterable[Detection]) -> None:
    rows = []
    for d in dets:
        row: dict[str, Any] = {
            "frame": d.frame_index,
            "box": _box_json(d.box),
            "conf": d.confidence,
        }
        if d.embedding is not None:
            row["emb"] = d.embedding.tolist()
        rows.append(row)
    atomic_write_text(path, _dump_lines(rows))


def read_detections(path: str | Path) -> list[Detection]:
    """dets.jsonl: ``{"frame", "box", "conf", "emb"?}`` per detection."""
    out = []
    for where, obj in _iter_lines(path):
        conf = _field(obj, "conf", where)
        if isinstance(conf, bool) or not isinstance(conf, (int, float)):
            raise SchemaError(f"{where}: field 'conf' must be a number")
        emb = None
        if "emb" in obj:
            emb = np.array(_float_list(obj["emb"], "emb", where))
        try:
            out.append(
                Detection(
                    frame_index=_int_field(obj, "frame", where),
                    box=_box(_field(obj, "box", where), "box", where),
                    confidence=float(conf),
                    embedding=emb,
                )
            )
        except MalformedInputError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    return out


def _tube_json(t: Tube) -> dict:
    obj: dict[str, Any] = {
        "tube_id": t.tube_id,
        "clip_id": t.clip_id,
        "entries": [{"frame": f, "box": _box_json(b)} for f, b in t.entries],
    }
    if t.mean_embedding is not None:
        obj["emb"] = t.mean_embedding.tolist()
    return obj


def _tube_from_json(obj: dict, where: str) -> Tube:
    raw_entries = _field(obj, "entries", where)
    if not isinstance(raw_entries, list):
        raise SchemaError(f"{where}: field 'entries' must be a list")
    entries = []
    for i, e in enumerate(raw_entries):
        w = f"{where} entries[{i}]"
        entries.append((_int_field(e, "frame", w), _box(_field(e, "box", w), "box", w)))
    emb = None
    if "emb" in obj:
        emb = np.array(_float_list(obj["emb"], "emb", where))
    try:
        return Tube(
            tube_id=_int_field(obj, "tube_id", where),
            clip_id=_int_field(obj, "clip_id", where),
            entries=tuple(entries),
            mean_embedding=emb,
        )
    except MalformedInputError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def write_tubes(
    path: str | Path,
    tubes: Iterable[Tube],
    retained: Optional[dict[str, list[int]]] = None,
) -> None:
    """tubes.json; ``retained`` maps query id -> surviving tube ids (clean stage)."""
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "tubes": [_tube_json(t) for t in tubes],
    }
    if retained is not None:
        doc["retained"] = {q: sorted(ids) for q, ids in sorted(retained.items())}
    atomic_write_text(path, _dump_doc(doc))


def read_tubes(path: str | Path) -> tuple[list[Tube], dict[str, list[int]]]:
    doc = _load_doc(path)
    where = str(path)
    raw = _field(doc, "tubes", where)
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: field 'tubes' must be a list")
    tubes = [_tube_from_json(t, f"{where} tubes[{i}]") for i, t in enumerate(raw)]
    retained: dict[str, list[int]] = {}
    if "retained" in doc:
        if not isinstance(doc["retained"], dict):
            raise SchemaError(f"{where}: field 'retained' must be an object")
        for q, ids in doc["retained"].items():
            if not isinstance(ids, list) or not all(
                isinstance(i, int) and not isinstance(i, bool) for i in ids
            ):
                raise SchemaError(
                    f"{where}: field 'retained.{q}' must be a list of tube ids"
                )
            retained[q] = list(ids)
    return tubes, retained


# ---------------------------------------------------------------------------
# ground truth / predictions / report


def write_gt(path: str | Path, gts: dict[str, GroundTruth]) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "queries": [
            {
                "query_id": qid,
                "start": gt.start_frame,
                "end": gt.end_frame,
                "boxes": [_box_json(b) for b in gt.boxes],
            }
            for qid, gt in gts.items()
        ],
    }
    atomic_write_text(path, _dump_doc(doc))


def read_gt(path: str | Path) -> dict[str, GroundTruth]:
    """gt.json: per query, a temporal span and one box per frame."""
    doc = _load_doc(path)
    where = str(path)
    raw = _field(doc, "queries", where)
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: field 'queries' must be a list")
    out: dict[str, GroundTruth] = {}
    for i, q in enumerate(raw):
        w = f"{where} queries[{i}]"
        qid = _str_field(q, "query_id", w)
        if qid in out:
            raise SchemaError(f"{w}: duplicate query_id {qid!r}")
        boxes_raw = _field(q, "boxes", w)
        if not isinstance(boxes_raw, list):
            raise SchemaError(f"{w}: field 'boxes' must be a list")
        boxes = tuple(_box(b, f"boxes[{j}]", w) for j, b in enumerate(boxes_raw))
        try:
            out[qid] = GroundTruth(
                start_frame=_int_field(q, "start", w),
                end_frame=_int_field(q, "end", w),
                boxes=boxes,
            )
        except MalformedInputError as exc:
            raise SchemaError(f"{w}: {exc}") from exc
    return out


def write_predictions(path: str | Path, preds: dict[str, Tube]) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "predictions": {qid: _tube_json(t) for qid, t in sorted(preds.items())},
    }
    atomic_write_text(path, _dump_doc(doc))


def read_predictions(path: str | Path) -> dict[str, Tube]:
    doc = _load_doc(path)
    where = str(path)
    raw = _field(doc, "predictions", where)
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: field 'predictions' must be an object")
    return {
        qid: _tube_from_json(t, f"{where} predictions[{qid!r}]")
        for qid, t in raw.items()
    }


def write_report(path: str | Path, report: EvaluationReport, mode: str) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "selection_mode": mode, **report.as_dict()}
    atomic_write_text(path, _dump_doc(doc))


def read_report(path: str | Path) -> dict:
    return _load_doc(path)


# ---------------------------------------------------------------------------
# loss scores / labels / breakdown


def write_labels(path: str | Path, rows: list[dict]) -> None:
    """labels.json rows carry match labels plus loss supervision per pair."""
    atomic_write_text(
        path, _dump_doc({"schema_version": SCHEMA_VERSION, "labels": rows})
    )


def _pair_key(obj: dict, where: str) -> tuple[str, int]:
    return _str_field(obj, "query_id", where), _int_field(obj, "tube_id", where)


def read_labels(path: str | Path) -> list[dict]:
    doc = _load_doc(path)
    where = str(path)
    raw = _field(doc, "labels", where)
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: field 'labels' must be a list")
    seen = set()
    for i, row in enumerate(raw):
        w = f"{where} labels[{i}]"
        if not isinstance(row, dict):
            raise SchemaError(f"{w}: must be an object")
        key = _pair_key(row, w)
        if key in seen:
            raise SchemaError(f"{w}: duplicate (query_id, tube_id) {key}")
        seen.add(key)
    return raw


def read_scores(path: str | Path) -> list[dict]:
    doc = _load_doc(path)
    where = str(path)
    raw = _field(doc, "scores", where)
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: field 'scores' must be a list")
    seen = set()
    for i, row in enumerate(raw):
        w = f"{where} scores[{i}]"
        if not isinstance(row, dict):
            raise SchemaError(f"{w}: must be an object")
        key = _pair_key(row, w)
        if key in seen:
            raise SchemaError(f"{w}: duplicate (query_id, tube_id) {key}")
        seen.add(key)
    return raw


def write_scores(path: str | Path, rows: list[dict]) -> None:
    atomic_write_text(
        path, _dump_doc({"schema_version": SCHEMA_VERSION, "scores": rows})
    )


def write_breakdown(path: str | Path, doc: dict) -> None:
    atomic_write_text(path, _dump_doc({"schema_version": SCHEMA_VERSION, **doc}))


def score_pack_from_row(row: dict, where: str) -> "ScorePack":
    from .losses import ScorePack  # deferred: losses does not know about files

    try:
        ge = row.get("ge")
        if not isinstance(ge, list) or len(ge) != 2:
            raise SchemaError(f"{where}: field 'ge' must be [p_female, p_male]")
        return ScorePack(
            gl=float(_field(row, "gl", where)),
            ge=(float(ge[0]), float(ge[1])),
            cls=tuple(float(c) for c in _field(row, "cls", where)),
            reg=tuple(
                (float(r[0]), float(r[1])) for r in _field(row, "reg", where)
            ),
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    except MalformedInputError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def label_pack_from_row(row: dict, where: str) -> Optional["LabelPack"]:
    """Build a LabelPack; returns None for rows labeled ignored (``gl`` null)."""
    from .grounding import FrameTargets
    from .losses import LabelPack

    gl = _field(row, "gl", where)
    if gl is None:
        return None
    ge_raw = row.get("ge")
    try:
        ge = None if ge_raw is None else Gender(ge_raw)
    except ValueError as exc:
        raise SchemaError(f"{where}: field 'ge': {exc}") from exc
    try:
        cls = tuple(int(c) for c in _field(row, "cls", where))
        reg = tuple(
            None if r is None else (int(r[0]), int(r[1]))
            for r in _field(row, "reg", where)
        )
        return LabelPack(gl=int(gl), ge=ge, targets=FrameTargets(cls=cls, reg=reg))
    except (TypeError, ValueError, IndexError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    except MalformedInputError as exc:
        raise SchemaError(f"{where}: {exc}") from exc
