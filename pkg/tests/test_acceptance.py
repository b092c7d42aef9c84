"""Acceptance gate: nine end-to-end checks, one verdict line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the verdict lines as
they print; without ``-s`` they appear in pytest's captured output.
"""

import itertools
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from tubeground.assignment import assign
from tubeground.boxes import BoundingBox, Detection
from tubeground.cli import main as cli_main
from tubeground.fixtures import FixtureSpec, PersonSpec, make_fixture, spec_to_dict
from tubeground.grounding import (
    GroundTruth,
    MatchLabelValue,
    MatchScores,
    label,
    match_scores,
    viou,
)
from tubeground.losses import (
    LabelPack,
    LossWeights,
    ScorePack,
    bce,
    focal_loss,
    focal_loss_grad,
    iou_reg_loss,
    iou_reg_loss_grad,
    total_loss,
)
from tubeground.grounding import FrameTargets
from tubeground.scene_split import Clip, FrameHistogram, detect_scenes
from tubeground.text_attributes import (
    ClothingColor,
    ClothingType,
    Gender,
    extract_attributes,
)
from tubeground.tracker import Tube, TrackerConfig, track_clip

CORPUS_PATH = Path(__file__).parent / "data" / "attr_corpus.jsonl"


def _verdict(num, summary, body):
    try:
        body()
    except BaseException:
        print(f"[FAIL] criterion {num}: {summary}")
        raise
    print(f"[PASS] criterion {num}: {summary}")


# ---------------------------------------------------------------- criterion 1


def test_criterion_1_property_suites_substitute_for_table_numbers():
    # Published benchmark scores need the full video dataset and trained
    # networks, which this desk-scale artifact deliberately excludes; the
    # substitute is the property/oracle suite below, which must exist and run.
    def body():
        here = sys.modules[__name__]
        for n in range(2, 10):
            assert any(
                name.startswith(f"test_criterion_{n}_") for name in dir(here)
            ), f"criterion {n} test missing"
        assert not hasattr(here, "load_model"), "no trained-model path belongs here"

    _verdict(1, "benchmark substituted by property suites (criteria 2-9)", body)


# ---------------------------------------------------------------- criterion 2


def _brute_scores(tube, gt):
    tube_boxes = {f: tube.box_at(f) for f in range(tube.start_frame, tube.end_frame + 1)}
    gt_boxes = {f: gt.box_at(f) for f in range(gt.start_frame, gt.end_frame + 1)}
    shared = sorted(set(tube_boxes) & set(gt_boxes))

    def box_iou(a, b):
        iw = min(a.x2, b.x2) - max(a.x1, b.x1)
        ih = min(a.y2, b.y2) - max(a.y1, b.y1)
        if iw <= 0 or ih <= 0:
            return 0.0
        inter = iw * ih
        return inter / (a.area + b.area - inter)

    ious = [box_iou(tube_boxes[f], gt_boxes[f]) for f in shared]
    s_overlap = len(shared) / len(gt_boxes)
    s_iou = sum(ious) / len(shared) if shared else 0.0
    union = len(set(tube_boxes) | set(gt_boxes))
    v = sum(ious) / union
    return s_overlap, s_iou, v


def test_criterion_2_metric_oracle_equivalence():
    def body():
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        for _ in range(1000):
            def int_boxes(n):
                out = []
                for _ in range(n):
                    x1 = int(rng.integers(0, 200))
                    y1 = int(rng.integers(0, 150))
                    w = int(rng.integers(1, 60))
                    h = int(rng.integers(1, 60))
                    out.append(BoundingBox(x1, y1, x1 + w, y1 + h))
                return out

            t_start = int(rng.integers(0, 25))
            g_start = int(rng.integers(0, 25))
            t_len = int(rng.integers(1, 21))
            g_len = int(rng.integers(1, 21))
            tube = Tube(
                tube_id=0,
                clip_id=0,
                entries=tuple(
                    (t_start + i, b) for i, b in enumerate(int_boxes(t_len))
                ),
            )
            gt = GroundTruth(
                start_frame=g_start,
                end_frame=g_start + g_len - 1,
                boxes=tuple(int_boxes(g_len)),
            )
            want_overlap, want_iou, want_viou = _brute_scores(tube, gt)
            got = match_scores(tube, gt)
            assert abs(got.s_overlap - want_overlap) <= 1e-12
            assert abs(got.s_iou - want_iou) <= 1e-12
            assert abs(viou(tube, gt) - want_viou) <= 1e-12
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"metric check took {elapsed:.2f}s"

    _verdict(2, "viou/match_scores match brute force on 1000 random pairs (1e-12)", body)


# ---------------------------------------------------------------- criterion 3


def test_criterion_3_labeling_partition():
    def body():
        for i in range(101):
            for j in range(101):
                so, si = i / 100, j / 100
                got = label(MatchScores(s_overlap=so, s_iou=si)).value
                if so > 0.7 and si > 0.5:
                    want = MatchLabelValue.POSITIVE
                elif so < 0.3 or si < 0.3:
                    want = MatchLabelValue.NEGATIVE
                else:
                    want = MatchLabelValue.IGNORED
                assert got is want, f"({so}, {si}): {got} != {want}"
        # thresholds themselves never qualify: boundaries land in ignored
        for so, si in [(0.7, 0.9), (0.9, 0.5), (0.3, 0.9), (0.9, 0.3), (0.7, 0.5)]:
            assert label(MatchScores(so, si)).value is MatchLabelValue.IGNORED

    _verdict(3, "label partition exact on 101x101 grid; boundaries -> ignored", body)


# ---------------------------------------------------------------- criterion 4


def test_criterion_4_assignment_optimality():
    def body():
        rng = np.random.default_rng(4)
        start = time.perf_counter()
        for _ in range(500):
            n_rows = int(rng.integers(1, 8))
            n_cols = int(rng.integers(1, 8))
            cost = rng.integers(0, 100, size=(n_rows, n_cols)).astype(float)
            result = assign(cost)
            k = min(n_rows, n_cols)
            best = min(
                sum(cost[r, c] for r, c in zip(rows, cols))
                for rows in itertools.combinations(range(n_rows), k)
                for cols in itertools.permutations(range(n_cols), k)
            )
            assert len(result.matches) == k
            assert result.total_cost == best  # integer-valued: exact
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"assignment check took {elapsed:.2f}s"

    _verdict(4, "assignment equals permutation brute force on 500 matrices (<=7x7)", body)


# ---------------------------------------------------------------- criterion 5


def _crossing_fixture():
    a = PersonSpec(
        person_id="a", gender=Gender.FEMALE, color=ClothingColor.RED,
        clothing=ClothingType.CLOTH, start_frame=0, end_frame=59,
        waypoints=((0, 60.0, 120.0), (59, 260.0, 120.0)), width=32.0, height=64.0,
    )
    b = PersonSpec(
        person_id="b", gender=Gender.MALE, color=ClothingColor.BLUE,
        clothing=ClothingType.TOP, start_frame=0, end_frame=59,
        waypoints=((0, 260.0, 120.0), (59, 60.0, 120.0)), width=32.0, height=64.0,
    )
    return make_fixture(FixtureSpec(num_frames=60, persons=(a, b)))


def test_criterion_5_tracker_end_to_end():
    def body():
        fix = _crossing_fixture()
        by_frame = {}
        for det in fix.detections:
            by_frame.setdefault(det.frame_index, []).append(det)
        tubes = track_clip(Clip(0, 0, 59), by_frame)
        assert len(tubes) == 2

        gts = {q.query_id: q.gt for q in fix.queries}
        for tube in tubes:
            emb = tube.mean_embedding
            person = "a" if emb[0] > emb[1] else "b"
            gt = gts[person]
            assert tube.start_frame == 0 and tube.end_frame == 59
            worst = min(
                _frame_iou(tube.box_at(f), gt.box_at(f)) for f in tube.frames()
            )
            # every frame stays on the person it started on: no identity switch
            assert worst >= 0.9, f"tube for {person}: min per-frame IoU {worst:.3f}"

        # occlusion longer than max_age must split into exactly two tubes
        def at(f):
            return Detection(
                frame_index=f,
                box=BoundingBox(90.0, 80.0, 110.0, 120.0),
                confidence=0.9,
            )

        occluded = {f: [at(f)] for f in itertools.chain(range(10), range(45, 80))}
        split = track_clip(Clip(0, 0, 79), occluded, TrackerConfig(max_age=30))
        assert len(split) == 2

    _verdict(5, "crossing fixture: 2 tubes, no switches, IoU >= 0.9; occlusion: 2 tubes", body)


def _frame_iou(a, b):
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


# ---------------------------------------------------------------- criterion 6


def test_criterion_6_loss_oracle():
    def body():
        # focal -> 0.5 * BCE at gamma=0, alpha=0.5
        for i in range(100):
            p = (i + 0.5) / 100
            for y in (0, 1):
                assert abs(focal_loss(p, y, 0.0, 0.5) - 0.5 * bce(p, y)) <= 1e-12

        # hand-computed single-tube composite total
        score = ScorePack(
            gl=0.6, ge=(0.7, 0.3), cls=(0.2, 0.8, 0.9, 0.4),
            reg=((0.0, 0.0), (1.0, 2.0), (2.0, 1.0), (0.0, 0.0)),
        )
        lab = LabelPack(
            gl=1, ge=Gender.FEMALE,
            targets=FrameTargets(cls=(0, 1, 1, 0), reg=(None, (0, 1), (1, 0), None)),
        )
        weights = LossWeights(lambda1=1.0, lambda2=0.5, lambda3=2.0, lambda4=1.5)
        want = (
            0.25 * 0.16 * -math.log(0.6)
            + 0.5 * -math.log(0.7)
            + 2.0 * (2 * -math.log(0.8) - math.log(0.9) - math.log(0.6)) / 4
            + 1.5 * math.log(3.0)
        )
        assert abs(total_loss([score], [lab], weights).total - want) <= 1e-9

        # indicator gate: perturbing gated branches of a GL=0 tube changes nothing
        neg = LabelPack(gl=0, ge=Gender.MALE, targets=FrameTargets((0, 0), (None, None)))
        base = ScorePack(gl=0.4, ge=(0.9, 0.1), cls=(0.9, 0.9), reg=((1.0, 1.0),) * 2)
        bent = ScorePack(gl=0.4, ge=(0.1, 0.9), cls=(0.1, 0.2), reg=((9.0, 9.0),) * 2)
        assert total_loss([base], [neg]) == total_loss([bent], [neg])

        # finite-difference gradient checks at 1e-5 relative tolerance
        h = 1e-5
        for gamma, alpha in [(2.0, 0.25), (1.0, 0.5)]:
            for y in (0, 1):
                for p in (0.1, 0.35, 0.6, 0.85):
                    numeric = (
                        focal_loss(p + h, y, gamma, alpha)
                        - focal_loss(p - h, y, gamma, alpha)
                    ) / (2 * h)
                    analytic = focal_loss_grad(p, y, gamma, alpha)
                    assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-9)
        for pred, target in [((2.0, 2.0), (1.0, 3.0)), ((0.5, 4.0), (2.0, 2.0)),
                             ((3.0, 1.0), (3.0, 5.0))]:
            gs, ge_ = iou_reg_loss_grad(pred, target)
            ds, de = pred
            num_s = (iou_reg_loss((ds + h, de), target)
                     - iou_reg_loss((ds - h, de), target)) / (2 * h)
            num_e = (iou_reg_loss((ds, de + h), target)
                     - iou_reg_loss((ds, de - h), target)) / (2 * h)
            assert gs == pytest.approx(num_s, rel=1e-5, abs=1e-9)
            assert ge_ == pytest.approx(num_e, rel=1e-5, abs=1e-9)

    _verdict(6, "focal/BCE grid, hand total 1e-9, gates, gradient checks", body)


# ---------------------------------------------------------------- criterion 7


def test_criterion_7_parser_corpus():
    def body():
        got = extract_attributes(
            "The woman in the green dress walks to the woman in the red dress."
        )
        assert [
            (t.gender.value, t.color.value, t.clothing.value) for t in got.triples
        ] == [("female", "green", "cloth"), ("female", "red", "cloth")]

        rows = [
            json.loads(line)
            for line in CORPUS_PATH.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        assert len(rows) == 50
        hits = 0
        for row in rows:
            attrs = extract_attributes(row["sentence"])
            triples = [
                (t.gender.value, t.color.value, t.clothing.value) for t in attrs.triples
            ]
            if triples == [tuple(t) for t in row["triples"]]:
                hits += 1
        assert hits / len(rows) >= 0.9, f"exact-match rate {hits}/{len(rows)}"

    _verdict(7, "worked sentence exact; corpus triple exact-match >= 90%", body)


# ---------------------------------------------------------------- criterion 8


def test_criterion_8_perfect_input_pipeline(tmp_path):
    def body():
        person = PersonSpec(
            person_id="p0", gender=Gender.FEMALE, color=ClothingColor.RED,
            clothing=ClothingType.CLOTH, start_frame=0, end_frame=59,
            waypoints=((0, 64.0, 128.0),), width=32.0, height=64.0,
        )
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(
            json.dumps(spec_to_dict(FixtureSpec(num_frames=60, persons=(person,))))
        )
        fix_dir = tmp_path / "fix"
        assert cli_main(
            ["make-fixture", "--spec", str(spec_path), "--out-dir", str(fix_dir)]
        ) == 0

        def run(out_dir, jobs):
            code = cli_main([
                "run",
                "--sentences", str(fix_dir / "sentences.jsonl"),
                "--hists", str(fix_dir / "hists.jsonl"),
                "--dets", str(fix_dir / "dets.jsonl"),
                "--gt", str(fix_dir / "gt.json"),
                "--out-dir", str(out_dir),
                "--jobs", str(jobs),
            ])
            assert code == 0

        run(tmp_path / "serial", 1)
        run(tmp_path / "parallel", 8)

        report = json.loads((tmp_path / "serial" / "report.json").read_text())
        assert abs(report["mean_viou"] - 1.0) <= 1e-9
        for name in ("attrs.jsonl", "clips.json", "tubes.json", "tubes_clean.json",
                     "labels.json", "preds.json", "report.json"):
            serial = (tmp_path / "serial" / name).read_bytes()
            parallel = (tmp_path / "parallel" / name).read_bytes()
            assert serial == parallel, f"{name} differs across --jobs"

    _verdict(8, "run subcommand: mean vIoU 1.0 +/- 1e-9, byte-identical at jobs 1/8", body)


# ---------------------------------------------------------------- criterion 9


def test_criterion_9_scene_splitting():
    def body():
        # designed cut: channel mass moves between bins at frame 50 with
        # per-channel L1 distance 1.6, so the content delta is 80 > 27
        a = np.array([0.8, 0.0, 0.2] + [0.0] * 13)
        b = np.array([0.0, 0.8, 0.2] + [0.0] * 13)
        hists = [FrameHistogram(f, a, a, a) for f in range(50)]
        hists += [FrameHistogram(f, b, b, b) for f in range(50, 100)]
        assert detect_scenes(hists, threshold=27.0, min_clip_len=15) == [
            Clip(0, 0, 49),
            Clip(1, 50, 99),
        ]

        rng = np.random.default_rng(9)
        for _ in range(200):
            n = int(rng.integers(1, 60))
            seq = []
            for f in range(n):
                chans = []
                for _ in range(3):
                    raw = rng.uniform(0.0, 1.0, size=8) + 1e-9
                    chans.append(raw / raw.sum())
                seq.append(FrameHistogram(f, *chans))
            threshold = float(rng.uniform(1.0, 99.0))
            min_len = int(rng.integers(1, 20))
            clips = detect_scenes(seq, threshold=threshold, min_clip_len=min_len)
            assert clips[0].start_frame == 0
            assert clips[-1].end_frame == n - 1
            for x, y in zip(clips, clips[1:]):
                assert y.start_frame == x.end_frame + 1

    _verdict(9, "two-scene fixture cut at designed frame; tiling on 200 sequences", body)
