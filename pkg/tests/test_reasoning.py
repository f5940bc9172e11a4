from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asmseg.reasoning import (
    THETA_STEPS,
    ContradictionConfig,
    calibrate_scores,
    contradiction_histogram,
    detect_contradictions,
    generate_hypotheses,
    normalize_variant,
)
from asmseg.relations import CooccurrenceModel, Edge, MultiRelationalGraph, Node, graph_from_map, train_cooccurrence

from helpers import random_scenes
from oracles import node_relabeling_oracle

HUMAN, TABLE, BOTTLE = 0, 1, 2


def _edge(sim, weights=(1, 0, 1, 0), rp=None):
    return Edge(0, 1, sim, sim, sim, sim, sim, sim if rp is None else rp, weights, 1.0, 1.0, 0)


def test_perfect_edge_score_is_four_sixths():
    assert _edge(1.0).score() == pytest.approx(4 / 6)
    assert _edge(1.0).score("rs_plus_rs") == pytest.approx(4 / 6)
    assert _edge(0.0).score() == 0.0


def test_variants_differ_only_in_last_term():
    e = _edge(1.0, rp=0.0)
    assert e.score("rs_plus_rp") == pytest.approx(3 / 6)
    assert e.score("rs_plus_rs") == pytest.approx(4 / 6)
    assert normalize_variant("rs_rs") == "rs_plus_rs"
    with pytest.raises(ValueError):
        normalize_variant("rp_rp")


def _graph(edges: dict, n: int):
    return MultiRelationalGraph(tuple(Node(None, k + 1) for k in range(n)), edges, {})


def test_all_zero_similarities_are_contradictions():
    graph = _graph({(0, 1): _edge(0.0), (1, 0): _edge(0.0)}, 2)
    report = detect_contradictions(graph, ContradictionConfig(theta=0.01))
    assert report.count == 2


def test_perfect_edges_are_not_contradictions():
    graph = _graph({(0, 1): _edge(1.0), (1, 0): _edge(1.0)}, 2)
    assert detect_contradictions(graph, ContradictionConfig(0.5)).count == 0


def test_table_one_scenario():
    contradicted = [(HUMAN, TABLE), (HUMAN, BOTTLE), (TABLE, HUMAN), (BOTTLE, HUMAN)]
    hist, candidates = contradiction_histogram(contradicted)
    assert hist == {HUMAN: 4, TABLE: 2, BOTTLE: 2}
    assert candidates == (HUMAN,)


def test_empty_histogram_and_ties():
    assert contradiction_histogram([]) == ({}, ())
    hist, candidates = contradiction_histogram([(0, 1), (1, 0), (2, 3), (3, 2), (4, 0)])
    assert hist[0] == 3 and candidates == (0,)
    hist, candidates = contradiction_histogram([(3, 1), (1, 3), (0, 2)])
    assert candidates == (1, 3)


@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)).filter(lambda t: t[0] != t[1]), max_size=30))
def test_histogram_matches_recount(contradicted):
    hist, candidates = contradiction_histogram(contradicted)
    for node, count in hist.items():
        assert count == sum(node in pair for pair in contradicted)
    assert sum(hist.values()) == 2 * len(contradicted)
    assert bool(candidates) == bool(contradicted)
    if hist:
        assert set(candidates) == {n for n, c in hist.items() if c == max(hist.values())}


@pytest.fixture(scope="module")
def trained():
    maps = random_scenes(3, 60, n_labels=5)
    return train_cooccurrence(maps, labels=range(1, 6)), random_scenes(4, 40, n_labels=5)


def test_theta_extremes_and_monotonicity(trained):
    model, scenes = trained
    for lmap in scenes[:10]:
        graph = graph_from_map(lmap, model)
        assert detect_contradictions(graph, ContradictionConfig(0.0)).count == 0
        at_one = detect_contradictions(graph, ContradictionConfig(1.0))
        assert at_one.count == sum(e.score() < 1.0 for e in graph.edges.values())
        previous: set = set()
        for k in range(THETA_STEPS + 1):
            report = detect_contradictions(graph, ContradictionConfig(k / THETA_STEPS))
            current = {(a, b) for a, b, _ in report.contradicted}
            assert previous <= current
            previous = current


def test_single_object_has_no_contradictions(trained):
    model, _ = trained
    graph = _graph({}, 1)
    assert detect_contradictions(graph, ContradictionConfig(0.9)).count == 0


def test_hypotheses_match_enumeration_oracle(trained):
    model, scenes = trained
    checked = 0
    for lmap in scenes:
        graph = graph_from_map(lmap, model)
        for node in range(len(graph.nodes)):
            if len(graph.nodes) < 2:
                continue
            ref_label, ref_score = node_relabeling_oracle(graph, node, model)
            hyps = generate_hypotheses(graph, node, model, max_k=len(model.labels))
            assert hyps[0].label == ref_label
            assert hyps[0].score == pytest.approx(ref_score, abs=1e-12)
            assert graph.nodes[node].label not in [h.label for h in hyps]
            assert [h.score for h in hyps] == sorted((h.score for h in hyps), reverse=True)
            checked += 1
    assert checked >= 50


def test_hypothesis_limits(trained):
    model, scenes = trained
    graph = next(g for g in (graph_from_map(m, model) for m in scenes) if len(g.nodes) >= 2)
    assert len(generate_hypotheses(graph, 0, model, max_k=1)) == 1
    table = {lab: tuple([float(lab)] * 10) for lab in model.labels}
    hyp = generate_hypotheses(graph, 0, model, table, max_k=1)[0]
    assert hyp.attributes == table[hyp.label]
    lonely = CooccurrenceModel((graph.nodes[0].label,), {})
    with pytest.raises(ValueError, match="no alternative labels"):
        generate_hypotheses(graph, 0, lonely)


def _sweep_oracle(scores, truth):
    best = (-1.0, None)
    for k in range(1, THETA_STEPS):
        t = k / THETA_STEPS
        acc = sum((s < t) == y for s, y in zip(scores, truth)) / len(scores)
        if acc > best[0]:
            best = (acc, t)
    return best


def test_calibration_on_separable_set():
    rng = np.random.default_rng(0)
    pos = rng.uniform(0.1, 0.39, 200)
    neg = rng.uniform(0.41, 0.9, 300)
    scores = np.concatenate([pos, neg])
    truth = [True] * 200 + [False] * 300
    cal = calibrate_scores(scores, truth)
    assert abs(cal.theta - 0.4) <= 1 / 256
    assert cal.accuracy == 1.0
    assert cal.accuracy == _sweep_oracle(scores.tolist(), truth)[0]
    assert calibrate_scores(scores, truth) == cal


def test_calibration_on_random_truth_warns():
    rng = np.random.default_rng(1)
    scores = rng.uniform(0, 1, 400)
    truth = rng.random(400) < 0.5
    with pytest.warns(UserWarning, match="below"):
        cal = calibrate_scores(scores, truth)
    assert cal.accuracy == pytest.approx(_sweep_oracle(scores.tolist(), truth.tolist())[0])


def test_calibration_rejects_empty():
    with pytest.raises(ValueError):
        calibrate_scores([], [])


def test_config_validation():
    with pytest.raises(ValueError):
        ContradictionConfig(theta=1.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert ContradictionConfig(0.3, "rs_rp").variant == "rs_plus_rp"
