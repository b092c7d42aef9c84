"""Stage orchestration: every stage reads and writes artifact files, so any
stage can be re-run from persisted intermediates and the `run` command is
just the stages in order.

Parallel stages use a thread pool with order-preserving collection; combined
with atomic writes and fixed-order serialization this makes artifacts
byte-identical for the same inputs regardless of the worker count.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from . import io
from .config import PipelineConfig
from .grounding import (
    EvaluationReport,
    GroundTruth,
    MatchLabelValue,
    evaluate_dataset,
    frame_targets,
    label,
    match_scores,
)
from .postprocess import clean_clip_tubes, filter_candidates
from .scene_split import detect_scenes
from .text_attributes import Gender, SentenceAttributes, extract_attributes
from .tracker import Tube, track_clip

log = logging.getLogger("tubeground.pipeline")


def _pool_map(fn, items, jobs: int):
    """Map preserving input order; plain loop when a single worker is asked."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# stages


def stage_parse_attrs(sentences_path: Path, out_path: Path, jobs: int = 1) -> None:
    sentences = io.read_sentences(sentences_path)
    results = _pool_map(lambda pair: extract_attributes(pair[1]), sentences, jobs)
    io.write_attrs(
        out_path,
        [(qid, sent, attrs) for (qid, sent), attrs in zip(sentences, results)],
    )
    log.info("parse-attrs: %d sentences -> %s", len(sentences), out_path)


def stage_split_scenes(
    hists_path: Path, out_path: Path, threshold: float, min_clip_len: int
) -> None:
    hists = io.read_histograms(hists_path)
    clips = detect_scenes(hists, threshold=threshold, min_clip_len=min_clip_len)
    io.write_clips(out_path, clips)
    log.info("split-scenes: %d frames -> %d clips", len(hists), len(clips))


def stage_track(
    clips_path: Path, dets_path: Path, out_path: Path, config: PipelineConfig, jobs: int = 1
) -> None:
    clips = io.read_clips(clips_path)
    detections = io.read_detections(dets_path)
    by_frame: dict[int, list] = {}
    for det in detections:
        by_frame.setdefault(det.frame_index, []).append(det)

    def run_one(clip):
        local = {
            f: by_frame[f]
            for f in range(clip.start_frame, clip.end_frame + 1)
            if f in by_frame
        }
        return track_clip(clip, local, config.tracker)

    per_clip = _pool_map(run_one, clips, jobs)
    tubes: list[Tube] = []
    next_id = 0
    for clip_tubes in per_clip:  # renumber so ids are unique across clips
        for tube in clip_tubes:
            tubes.append(dataclasses.replace(tube, tube_id=next_id))
            next_id += 1
    io.write_tubes(out_path, tubes)
    log.info("track: %d detections -> %d tubes", len(detections), len(tubes))


def stage_postprocess(
    tubes_path: Path,
    attrs_path: Optional[Path],
    out_path: Path,
    config: PipelineConfig,
    jobs: int = 1,
) -> None:
    tubes, _ = io.read_tubes(tubes_path)
    by_clip: dict[int, list[Tube]] = {}
    for tube in tubes:
        by_clip.setdefault(tube.clip_id, []).append(tube)

    clip_ids = sorted(by_clip)
    cleaned_lists = _pool_map(
        lambda cid: clean_clip_tubes(by_clip[cid], config.postprocess), clip_ids, jobs
    )
    cleaned_by_clip = dict(zip(clip_ids, cleaned_lists))
    cleaned = sorted(
        (t for tubes in cleaned_by_clip.values() for t in tubes), key=lambda t: t.tube_id
    )

    retained = None
    if attrs_path is not None:
        attrs = io.read_attrs(attrs_path)
        retained = {}
        for qid in sorted(attrs):
            kept = filter_candidates(cleaned_by_clip, attrs[qid])
            retained[qid] = sorted(t.tube_id for tubes in kept.values() for t in tubes)
    io.write_tubes(out_path, cleaned, retained=retained)
    log.info("postprocess: %d -> %d tubes", len(tubes), len(cleaned))


def _candidates_for(
    qid: str, tubes: list[Tube], retained: dict[str, list[int]]
) -> list[Tube]:
    if qid not in retained:
        return tubes
    wanted = set(retained[qid])
    return [t for t in tubes if t.tube_id in wanted]


def _gt_gender(attrs: Optional[SentenceAttributes]) -> Optional[Gender]:
    if attrs is None or not attrs.triples:
        return None
    g = attrs.triples[0].gender
    return None if g is Gender.UNKNOWN else g


def stage_label(
    tubes_path: Path,
    gt_path: Path,
    out_path: Path,
    attrs_path: Optional[Path] = None,
) -> None:
    """Match every candidate tube against its query's GT and emit supervision.

    Rows carry the positive/negative/ignored match label with its scores, and
    the loss-oracle fields: ``gl`` (1/0, null for ignored pairs), ``ge``, the
    per-frame ``cls`` targets and ``reg`` boundary distances.
    """
    tubes, retained = io.read_tubes(tubes_path)
    gts = io.read_gt(gt_path)
    attrs = io.read_attrs(attrs_path) if attrs_path is not None else {}

    rows = []
    for qid in gts:
        gt = gts[qid]
        ge = _gt_gender(attrs.get(qid))
        for tube in _candidates_for(qid, tubes, retained):
            scores = match_scores(tube, gt)
            lab = label(scores)
            if lab.value is MatchLabelValue.POSITIVE:
                gl = 1
            elif lab.value is MatchLabelValue.NEGATIVE:
                gl = 0
            else:
                gl = None
            if scores.s_overlap > 0.0:
                targets = frame_targets(tube, gt)
                cls = list(targets.cls)
                reg = [list(r) if r is not None else None for r in targets.reg]
            else:
                cls = [0] * tube.num_frames
                reg = [None] * tube.num_frames
            rows.append(
                {
                    "query_id": qid,
                    "tube_id": tube.tube_id,
                    "label": lab.value.value,
                    "s_overlap": scores.s_overlap,
                    "s_iou": scores.s_iou,
                    "gl": gl,
                    "ge": None if ge is None else ge.value,
                    "cls": cls,
                    "reg": reg,
                }
            )
    io.write_labels(out_path, rows)
    log.info("label: %d (query, tube) pairs -> %s", len(rows), out_path)


def select_predictions(
    tubes: list[Tube], gts: dict[str, GroundTruth], retained: dict[str, list[int]]
) -> dict[str, Tube]:
    """Upper-bound selection: per query, the candidate maximizing s_iou.

    Stands in for the learned ranker; ties break toward the lowest tube id.
    Queries with no candidates get no prediction and will score 0.
    """
    preds: dict[str, Tube] = {}
    for qid in gts:
        best: Optional[tuple[float, int]] = None
        best_tube: Optional[Tube] = None
        for tube in _candidates_for(qid, tubes, retained):
            key = (-match_scores(tube, gts[qid]).s_iou, tube.tube_id)
            if best is None or key < best:
                best = key
                best_tube = tube
        if best_tube is not None:
            preds[qid] = best_tube
    return preds


def stage_select(tubes_path: Path, gt_path: Path, out_path: Path) -> None:
    tubes, retained = io.read_tubes(tubes_path)
    gts = io.read_gt(gt_path)
    io.write_predictions(out_path, select_predictions(tubes, gts, retained))


def stage_evaluate(
    pred_path: Path, gt_path: Path, report_path: Path, mode: str = "provided"
) -> EvaluationReport:
    preds = io.read_predictions(pred_path)
    gts = io.read_gt(gt_path)
    report = evaluate_dataset(preds, gts)
    io.write_report(report_path, report, mode=mode)
    log.info(
        "evaluate: mean vIoU %.4f over %d queries (%d missing)",
        report.mean_viou,
        report.evaluated,
        report.missing,
    )
    return report


# ---------------------------------------------------------------------------
# end-to-end


def run_pipeline(
    sentences_path: Path,
    hists_path: Path,
    dets_path: Path,
    gt_path: Path,
    out_dir: Path,
    config: PipelineConfig,
    jobs: int = 1,
) -> EvaluationReport:
    """parse -> split -> track -> postprocess -> label -> select -> evaluate."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for p in (sentences_path, hists_path, dets_path, gt_path):
        if not Path(p).is_file():
            raise FileNotFoundError(f"input file not found: {p}")

    attrs = out / "attrs.jsonl"
    clips = out / "clips.json"
    tubes = out / "tubes.json"
    clean = out / "tubes_clean.json"
    labels = out / "labels.json"
    preds = out / "preds.json"
    report = out / "report.json"

    stage_parse_attrs(sentences_path, attrs, jobs=jobs)
    stage_split_scenes(
        hists_path,
        clips,
        threshold=config.scene_split.threshold,
        min_clip_len=config.scene_split.min_clip_len,
    )
    stage_track(clips, dets_path, tubes, config, jobs=jobs)
    stage_postprocess(tubes, attrs, clean, config, jobs=jobs)
    stage_label(clean, gt_path, labels, attrs_path=attrs)
    stage_select(clean, gt_path, preds)
    return stage_evaluate(preds, gt_path, report, mode="oracle")
