import numpy as np
import pytest
from conftest import box_at, const_tube, tube_from_boxes

from tubeground.boxes import iou
from tubeground.errors import MalformedInputError
from tubeground.postprocess import (
    PostprocessConfig,
    clean_clip_tubes,
    dedup,
    filter_candidates,
    reconnect,
    smooth,
)
from tubeground.text_attributes import extract_attributes

CFG = PostprocessConfig()


def test_identical_duplicates_collapse():
    a = const_tube(50, tube_id=0)
    b = const_tube(50, tube_id=1)
    kept = dedup([a, b], CFG)
    assert [t.tube_id for t in kept] == [0]


def test_shorter_duplicate_removed_longer_kept():
    long = const_tube(60, tube_id=1)
    short = const_tube(30, tube_id=0, start=10)
    kept = dedup([short, long], CFG)
    assert [t.tube_id for t in kept] == [1]


def test_spatially_distinct_tubes_survive_dedup():
    a = const_tube(50, cx=50.0, tube_id=0)
    b = const_tube(50, cx=200.0, tube_id=1)
    kept = dedup([a, b], CFG)
    assert [t.tube_id for t in kept] == [0, 1]


def test_low_time_overlap_not_a_duplicate():
    # only 20% of the short tube is covered, below the 0.8 floor
    a = const_tube(100, tube_id=0)
    b = const_tube(50, start=90, tube_id=1)
    kept = dedup([a, b], CFG)
    assert [t.tube_id for t in kept] == [0, 1]


def test_dedup_fixed_point():
    tubes = [const_tube(50, tube_id=0), const_tube(50, cx=200.0, tube_id=1)]
    once = dedup(tubes, CFG)
    assert dedup(once, CFG) == once


def test_reconnect_overlapping_fragments():
    cfg = PostprocessConfig(reconnect_overlap_max_frames=5, reconnect_iou_min=0.5)
    a = const_tube(50, start=0, tube_id=0)  # frames 0-49
    b = const_tube(52, start=48, tube_id=1)  # frames 48-99
    merged = reconnect([a, b], cfg)
    assert len(merged) == 1
    tube = merged[0]
    assert tube.tube_id == 0
    assert (tube.start_frame, tube.end_frame) == (0, 99)
    assert list(tube.frames()) == list(range(100))


def test_reconnect_gap_filled_by_interpolation():
    cfg = PostprocessConfig(reconnect_overlap_max_frames=5, reconnect_iou_min=0.5)
    a = tube_from_boxes([box_at(100.0, 100.0)] * 10, start=0, tube_id=0)  # ends 9
    b = tube_from_boxes([box_at(102.0, 100.0)] * 10, start=13, tube_id=1)  # gap 10-12
    merged = reconnect([a, b], cfg)
    assert len(merged) == 1
    tube = merged[0]
    assert (tube.start_frame, tube.end_frame) == (0, 22)
    # interpolated centers march evenly across the gap
    assert tube.box_at(10).center[0] == pytest.approx(100.5)
    assert tube.box_at(11).center[0] == pytest.approx(101.0)
    assert tube.box_at(12).center[0] == pytest.approx(101.5)


def test_reconnect_rejects_long_gap():
    cfg = PostprocessConfig(reconnect_overlap_max_frames=5, reconnect_iou_min=0.5)
    a = const_tube(50, start=0, tube_id=0)  # ends at 49
    b = const_tube(20, start=80, tube_id=1)  # gap of 30 frames
    merged = reconnect([a, b], cfg)
    assert [t.tube_id for t in merged] == [0, 1]


def test_reconnect_rejects_spatial_mismatch():
    cfg = PostprocessConfig(reconnect_overlap_max_frames=5, reconnect_iou_min=0.5)
    a = const_tube(50, cx=50.0, start=0, tube_id=0)
    b = const_tube(50, cx=250.0, start=52, tube_id=1)  # far away across the gap
    assert len(reconnect([a, b], cfg)) == 2


def test_reconnect_chains_three_fragments():
    cfg = PostprocessConfig(reconnect_overlap_max_frames=5, reconnect_iou_min=0.5)
    parts = [
        const_tube(20, start=0, tube_id=0),
        const_tube(20, start=21, tube_id=1),
        const_tube(20, start=42, tube_id=2),
    ]
    merged = reconnect(parts, cfg)
    assert len(merged) == 1
    assert (merged[0].start_frame, merged[0].end_frame) == (0, 61)


def test_smooth_constant_trajectory_unchanged():
    tube = const_tube(30, cx=64.0, cy=128.0, w=32.0, h=64.0)
    out = smooth(tube, CFG)
    assert out.entries == tube.entries
    assert out.tube_id == tube.tube_id


def test_smooth_preserves_span_and_metadata():
    emb = np.zeros(4)
    emb[2] = 1.0
    boxes = [box_at(50.0 + 7.0 * ((i * 13) % 5), 60.0) for i in range(25)]
    tube = tube_from_boxes(boxes, start=5, tube_id=3, clip_id=2, emb=emb)
    out = smooth(tube, CFG)
    assert (out.start_frame, out.end_frame) == (5, 29)
    assert out.tube_id == 3
    assert out.clip_id == 2
    assert np.array_equal(out.mean_embedding, emb)


def test_smooth_damps_jitter():
    rng = np.random.default_rng(3)
    centers = 100.0 + rng.normal(0.0, 4.0, size=60)
    tube = tube_from_boxes([box_at(c, 100.0) for c in centers])
    out = smooth(tube, CFG)
    smoothed = np.array([b.center[0] for b in out.boxes()])
    assert np.var(np.diff(smoothed)) < np.var(np.diff(centers))


def test_smooth_interior_mean_preserved():
    # with the trajectory constant within two radii of each end, full-kernel
    # smoothing redistributes mass without creating or destroying it, so the
    # mean over interior frames is exact
    r = CFG.smooth_radius
    rng = np.random.default_rng(9)
    n = 40
    cx = np.full(n, 80.0)
    cx[2 * r : n - 2 * r] = rng.uniform(40.0, 160.0, size=n - 4 * r)
    tube = tube_from_boxes([box_at(c, 100.0) for c in cx])
    out = smooth(tube, CFG)
    interior = slice(r, n - r)
    got = np.mean([b.center[0] for b in out.boxes()][interior])
    want = np.mean(cx[interior])
    assert got == pytest.approx(want, abs=1e-9)


def test_smooth_interior_mean_with_distinct_margins():
    r = CFG.smooth_radius
    n = 50
    cx = np.concatenate(
        [
            np.full(2 * r, 30.0),
            np.linspace(35.0, 170.0, n - 4 * r),
            np.full(2 * r, 180.0),
        ]
    )
    tube = tube_from_boxes([box_at(c, 100.0) for c in cx])
    out = smooth(tube, CFG)
    interior = slice(r, n - r)
    got = np.mean([b.center[0] for b in out.boxes()][interior])
    assert got == pytest.approx(np.mean(cx[interior]), abs=1e-9)


def test_filter_candidates_multi_person_sentence():
    attrs = extract_attributes("A man walks past a woman in a red dress.")
    assert attrs.person_count == 2
    tubes_by_clip = {
        0: [const_tube(20, tube_id=0)],
        1: [const_tube(20, tube_id=1), const_tube(20, cx=200.0, tube_id=2)],
    }
    filtered = filter_candidates(tubes_by_clip, attrs)
    assert filtered[0] == []
    assert [t.tube_id for t in filtered[1]] == [1, 2]


def test_filter_candidates_single_person_sentence():
    attrs = extract_attributes("A woman in a blue top walks.")
    assert attrs.person_count == 1
    tubes_by_clip = {0: [const_tube(20, tube_id=0)]}
    filtered = filter_candidates(tubes_by_clip, attrs)
    assert [t.tube_id for t in filtered[0]] == [0]


def test_clean_clip_tubes_full_pass():
    cfg = PostprocessConfig(reconnect_overlap_max_frames=5, reconnect_iou_min=0.5)
    dup = const_tube(50, tube_id=1)
    base = const_tube(50, tube_id=0)
    tail = const_tube(48, start=52, tube_id=2)
    cleaned = clean_clip_tubes([base, dup, tail], cfg)
    assert len(cleaned) == 1
    assert (cleaned[0].start_frame, cleaned[0].end_frame) == (0, 99)


def test_config_validation():
    with pytest.raises(MalformedInputError):
        PostprocessConfig(dup_iou_min=1.5)
    with pytest.raises(MalformedInputError):
        PostprocessConfig(smooth_radius=0)
    with pytest.raises(MalformedInputError):
        PostprocessConfig(smooth_sigma=0.0)
    with pytest.raises(MalformedInputError):
        PostprocessConfig(reconnect_overlap_max_frames=-1)


def test_junction_iou_uses_boundary_boxes_across_gap():
    cfg = PostprocessConfig(reconnect_overlap_max_frames=5, reconnect_iou_min=0.5)
    drift = [box_at(100.0 + i, 100.0) for i in range(10)]  # ends at cx=109
    a = tube_from_boxes(drift, start=0, tube_id=0)
    b = tube_from_boxes([box_at(109.0, 100.0)] * 10, start=12, tube_id=1)
    assert iou(a.entries[-1][1], b.entries[0][1]) == 1.0
    assert len(reconnect([a, b], cfg)) == 1
