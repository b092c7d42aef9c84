import numpy as np
import pytest

from tubeground.errors import MalformedInputError
from tubeground.fixtures import (
    TRUE_DETECTION_CONF,
    FixtureSpec,
    NoiseSpec,
    PersonSpec,
    make_fixture,
    person_sentence,
    spec_from_dict,
    spec_to_dict,
)
from tubeground.scene_split import Clip, detect_scenes
from tubeground.text_attributes import ClothingColor, ClothingType, Gender, extract_attributes


def person(pid="p0", gender=Gender.FEMALE, color=ClothingColor.RED,
           clothing=ClothingType.CLOTH, start=0, end=29,
           waypoints=((0, 100.0, 100.0),), w=32.0, h=64.0):
    return PersonSpec(
        person_id=pid, gender=gender, color=color, clothing=clothing,
        start_frame=start, end_frame=end, waypoints=waypoints, width=w, height=h,
    )


def test_deterministic_per_seed():
    spec = FixtureSpec(
        num_frames=40,
        persons=(person(),),
        noise=NoiseSpec(jitter_std=2.0, drop_prob=0.1, false_positive_rate=0.2),
        seed=5,
    )
    a = make_fixture(spec)
    b = make_fixture(spec)
    assert len(a.detections) == len(b.detections)
    for da, db in zip(a.detections, b.detections):
        assert da.frame_index == db.frame_index
        assert (da.box.x1, da.box.y1, da.box.x2, da.box.y2) == (
            db.box.x1, db.box.y1, db.box.x2, db.box.y2,
        )
        assert da.confidence == db.confidence
    assert [q.sentence for q in a.queries] == [q.sentence for q in b.queries]


def test_seed_changes_noise():
    base = dict(num_frames=40, persons=(person(),), noise=NoiseSpec(jitter_std=2.0))
    a = make_fixture(FixtureSpec(**base, seed=1))
    b = make_fixture(FixtureSpec(**base, seed=2))
    assert any(
        da.box.x1 != db.box.x1 for da, db in zip(a.detections, b.detections)
    )


def test_zero_noise_reproduces_ground_truth_exactly():
    spec = FixtureSpec(num_frames=30, persons=(person(),))
    fix = make_fixture(spec)
    assert len(fix.detections) == 30
    gt = fix.queries[0].gt
    for det in fix.detections:
        want = gt.box_at(det.frame_index)
        assert (det.box.x1, det.box.y1, det.box.x2, det.box.y2) == (
            want.x1, want.y1, want.x2, want.y2,
        )
        assert det.confidence == TRUE_DETECTION_CONF


def test_drop_everything_leaves_no_detections():
    spec = FixtureSpec(
        num_frames=30, persons=(person(),), noise=NoiseSpec(drop_prob=1.0)
    )
    assert make_fixture(spec).detections == ()


def test_false_positives_have_low_confidence():
    spec = FixtureSpec(
        num_frames=200, persons=(), noise=NoiseSpec(false_positive_rate=1.0), seed=3
    )
    fix = make_fixture(spec)
    assert len(fix.detections) == 200
    for det in fix.detections:
        assert 0.45 <= det.confidence < 0.75
        assert np.linalg.norm(det.embedding) == pytest.approx(1.0, abs=1e-9)


def test_duplicate_person_ids_rejected():
    with pytest.raises(MalformedInputError, match="overlapping person ids"):
        FixtureSpec(num_frames=30, persons=(person("p0"), person("p0")))


def test_person_spec_validation():
    with pytest.raises(MalformedInputError):
        person(waypoints=((5, 100.0, 100.0), (5, 120.0, 100.0)))
    with pytest.raises(MalformedInputError):
        person(waypoints=((40, 100.0, 100.0),))  # outside [0, 29]
    with pytest.raises(MalformedInputError):
        person(w=0.0)
    with pytest.raises(MalformedInputError):
        PersonSpec(
            person_id="", gender=Gender.MALE, color=ClothingColor.RED,
            clothing=ClothingType.TOP, start_frame=0, end_frame=9,
            waypoints=((0, 50.0, 50.0),), width=10.0, height=20.0,
        )


def test_out_of_frame_person_rejected():
    with pytest.raises(MalformedInputError):
        FixtureSpec(
            num_frames=30,
            frame_width=100,
            frame_height=100,
            persons=(person(waypoints=((0, 95.0, 50.0),), w=20.0),),
        )


def test_waypoint_interpolation():
    p = person(waypoints=((5, 100.0, 100.0), (15, 200.0, 50.0)), start=0, end=29)
    assert p.center_at(0) == (100.0, 100.0)  # held before first waypoint
    assert p.center_at(5) == (100.0, 100.0)
    assert p.center_at(10) == (150.0, 75.0)  # halfway
    assert p.center_at(15) == (200.0, 50.0)
    assert p.center_at(29) == (200.0, 50.0)  # held after last waypoint
    with pytest.raises(MalformedInputError):
        p.center_at(30)


def test_histograms_encode_scene_cuts():
    spec = FixtureSpec(num_frames=60, scene_cuts=(20, 40))
    fix = make_fixture(spec)
    assert len(fix.histograms) == 60
    assert fix.histograms[0].hue[0] == 1.0
    assert fix.histograms[20].hue[3] == 1.0
    assert fix.histograms[40].hue[6] == 1.0
    clips = detect_scenes(list(fix.histograms), threshold=27.0, min_clip_len=15)
    assert clips == [Clip(0, 0, 19), Clip(1, 20, 39), Clip(2, 40, 59)]


def test_scene_cut_validation():
    with pytest.raises(MalformedInputError):
        FixtureSpec(num_frames=30, scene_cuts=(0,))  # cut at the first frame
    with pytest.raises(MalformedInputError):
        FixtureSpec(num_frames=30, scene_cuts=(10, 10))
    with pytest.raises(MalformedInputError):
        FixtureSpec(num_frames=30, scene_cuts=(40,))


def test_sentences_round_trip_through_parser():
    spec = FixtureSpec(
        num_frames=30,
        persons=(
            person("a", Gender.FEMALE, ClothingColor.RED, ClothingType.CLOTH),
            person("b", Gender.MALE, ClothingColor.BLUE, ClothingType.TOP,
                   waypoints=((0, 200.0, 100.0),)),
        ),
    )
    fix = make_fixture(spec)
    q0, q1 = fix.queries
    assert q0.sentence == "The woman in a red dress walks past the man in a blue shirt."
    assert q1.sentence == "The man in a blue shirt walks past the woman in a red dress."
    for q, p in zip(fix.queries, spec.persons):
        attrs = extract_attributes(q.sentence)
        assert attrs.person_count == 2
        first = attrs.triples[0]
        assert first.gender is p.gender
        assert first.color is p.color
        assert first.clothing is p.clothing


def test_single_person_sentence_form():
    spec = FixtureSpec(num_frames=30, persons=(person("a", Gender.MALE),))
    fix = make_fixture(spec)
    assert fix.queries[0].sentence == "The man in a red dress walks around."
    assert extract_attributes(fix.queries[0].sentence).person_count == 1


def test_sentence_without_attributes():
    p = person("a", Gender.UNKNOWN, ClothingColor.UNKNOWN, ClothingType.UNKNOWN)
    assert person_sentence((p,), 0) == "The person walks around."


def test_queries_carry_ground_truth_spans():
    p = person(start=5, end=24, waypoints=((5, 100.0, 100.0),))
    fix = make_fixture(FixtureSpec(num_frames=30, persons=(p,)))
    gt = fix.queries[0].gt
    assert (gt.start_frame, gt.end_frame) == (5, 24)
    assert len(gt.boxes) == 20
    assert fix.queries[0].query_id == "p0"


def test_spec_round_trip_through_dict():
    spec = FixtureSpec(
        num_frames=50,
        scene_cuts=(25,),
        persons=(person(), person("p1", waypoints=((0, 200.0, 150.0),))),
        noise=NoiseSpec(jitter_std=1.5, drop_prob=0.05, false_positive_rate=0.1),
        seed=11,
    )
    assert spec_from_dict(spec_to_dict(spec)) == spec


def test_spec_dict_rejects_unknown_fields():
    d = spec_to_dict(FixtureSpec(num_frames=10))
    d["mystery"] = 1
    with pytest.raises(MalformedInputError):
        spec_from_dict(d)


def test_spec_dict_rejects_bad_version():
    d = spec_to_dict(FixtureSpec(num_frames=10))
    d["schema_version"] = "99"
    with pytest.raises(MalformedInputError):
        spec_from_dict(d)


def test_noise_spec_validation():
    with pytest.raises(MalformedInputError):
        NoiseSpec(jitter_std=-1.0)
    with pytest.raises(MalformedInputError):
        NoiseSpec(drop_prob=1.5)
