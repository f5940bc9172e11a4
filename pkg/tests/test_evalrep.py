from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from asmseg.evalrep import (
    ClassScoreTable,
    emit_report,
    evaluate_dataset,
    format_scores,
    image_mean_iou,
    iou_per_class,
    load_scores,
    parse_scores,
    save_scores,
)
from asmseg.labelmap import LabelMap

from oracles import pixel_iou_counts


def test_eighty_over_one_forty():
    gt = np.zeros((20, 20), dtype=np.uint8)
    pred = np.zeros((20, 20), dtype=np.uint8)
    gt.flat[:100] = 1
    pred.flat[20:140] = 1  # 80 px shared, 120 px predicted
    i, u = iou_per_class(LabelMap(pred), LabelMap(gt))[1]
    assert (i, u) == (80, 140)
    assert i / u == pytest.approx(0.5714, abs=1e-4)


def test_identical_maps_score_one():
    gt = LabelMap(np.array([[0, 1, 2], [2, 2, 1]]))
    assert all(i == u for i, u in iou_per_class(gt, gt).values())
    assert image_mean_iou(gt, gt) == 1.0
    table = evaluate_dataset([(gt, gt)])
    assert table.average == 1.0


def test_void_pixels_are_ignored():
    gt = LabelMap(np.array([[255, 1], [1, 0]]))
    pred = LabelMap(np.array([[1, 1], [255, 0]]))
    assert iou_per_class(pred, gt) == {0: (1, 1), 1: (1, 1)}


def test_absent_class_is_excluded():
    gt = LabelMap(np.array([[0, 1]]))
    table = evaluate_dataset([(gt, gt)], classes=[0, 1, 2])
    assert table.iou(2) is None
    assert table.present() == [0, 1]
    assert table.average == 1.0
    assert "--" in emit_report([("A", table)], {2: "bird"}).splitlines()[-3]


maps = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda s: st.tuples(
        arrays(np.uint8, s, elements=st.sampled_from([0, 1, 2, 3, 255])),
        arrays(np.uint8, s, elements=st.sampled_from([0, 1, 2, 3, 255])),
    )
)


@settings(max_examples=60, deadline=None)
@given(st.lists(maps, min_size=1, max_size=3))
def test_dataset_counts_match_pixel_recount(pairs):
    table = evaluate_dataset([(LabelMap(p), LabelMap(g)) for p, g in pairs])
    inter, union = pixel_iou_counts([(p.tolist(), g.tolist()) for p, g in pairs])
    assert {c: table.union[c] for c in table.present()} == union
    assert {c: table.intersection.get(c, 0) for c in table.present()} == {c: inter.get(c, 0) for c in union}


def test_three_image_recount_and_accumulation():
    rng = np.random.default_rng(4)
    pairs = [(rng.integers(0, 4, (9, 11)).astype(np.uint8), rng.integers(0, 4, (9, 11)).astype(np.uint8))
             for _ in range(3)]
    table = evaluate_dataset([(LabelMap(p), LabelMap(g)) for p, g in pairs])
    inter, union = pixel_iou_counts([(p.tolist(), g.tolist()) for p, g in pairs])
    for c in union:
        assert table.iou(c) == inter.get(c, 0) / union[c]


def test_counts_accumulate_before_division():
    hit = (LabelMap(np.array([[1]])), LabelMap(np.array([[1]])))
    miss = (LabelMap(np.zeros((3, 3))), LabelMap(np.ones((3, 3))))
    table = evaluate_dataset([hit, miss])
    assert table.iou(1) == pytest.approx(1 / 10)  # a per-image mean would give 0.5


def test_report_best_column_and_ties():
    a = ClassScoreTable((0, 1), {0: 5, 1: 2}, {0: 10, 1: 10})
    b = ClassScoreTable((0, 1), {0: 5, 1: 8}, {0: 10, 1: 10})
    text = emit_report([("A", a), ("B", b)], {0: "background", 1: "car"})
    rows = {line.split(":")[0]: line for line in text.splitlines() if ":" in line}
    assert rows["car"].split()[-1] == "B"
    assert rows["background"].split()[-1] == "A"  # tie goes to the first method
    assert rows["Average accuracy"].split()[-1] == "B"
    assert emit_report([("A", a), ("B", b)]) == emit_report([("A", a), ("B", b)])


def test_report_columns_are_aligned():
    a = ClassScoreTable((0, 1, 12), {0: 5, 1: 2, 12: 1}, {0: 10, 1: 10, 12: 3})
    text = emit_report([("alpha", a), ("b", a)], {0: "background", 1: "car", 12: "x"})
    body = [line for line in text.splitlines()[2:] if not set(line) <= {"-"}]
    ends = {len(line) for line in body}
    assert len(ends) == 1


def test_all_absent_report_warns():
    empty = ClassScoreTable((1, 2), {}, {})
    text = emit_report([("A", empty)])
    assert "WARNING" in text
    assert text.count("--") >= 3


def test_scores_round_trip(tmp_path):
    table = ClassScoreTable((0, 1, 2), {0: 5, 1: 2}, {0: 10, 1: 7})
    save_scores(table, tmp_path / "s.txt")
    assert load_scores(tmp_path / "s.txt") == parse_scores(format_scores(table))
    assert (tmp_path / "s.txt").read_text().splitlines()[2] == "2 0 0 --"
    assert load_scores(tmp_path / "s.txt").iou(1) == table.iou(1)


def test_shape_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        iou_per_class(LabelMap(np.zeros((2, 2))), LabelMap(np.zeros((2, 3))))
