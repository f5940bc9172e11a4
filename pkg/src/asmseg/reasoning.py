"""Contradiction detection, the contradiction histogram, hypotheses, and threshold calibration."""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .labelmap import AttributeVector
from .relations import CooccurrenceModel, MultiRelationalGraph, compute_edge

VARIANTS = ("rs_plus_rp", "rs_plus_rs")
THETA_STEPS = 256


def normalize_variant(variant: str) -> str:
    aliases = {"rs_rp": "rs_plus_rp", "rs_rs": "rs_plus_rs"}
    variant = aliases.get(variant, variant)
    if variant not in VARIANTS:
        raise ValueError(f"unknown scoring variant {variant!r}")
    return variant


@dataclass(frozen=True)
class ContradictionConfig:
    theta: float = 0.5
    variant: str = "rs_plus_rp"

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        object.__setattr__(self, "variant", normalize_variant(self.variant))


@dataclass(frozen=True)
class ContradictionReport:
    contradicted: tuple[tuple[int, int, float], ...]
    histogram: dict[int, int]
    candidates: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.contradicted)


def contradiction_histogram(contradicted) -> tuple[dict[int, int], tuple[int, ...]]:
    """Count how often each node takes part in a contradicted edge.

    Candidates are every node reaching the top count, in node order.
    """
    hist: Counter[int] = Counter()
    for edge in contradicted:
        hist[edge[0]] += 1
        hist[edge[1]] += 1
    if not hist:
        return {}, ()
    top = max(hist.values())
    return dict(sorted(hist.items())), tuple(sorted(n for n, c in hist.items() if c == top))


def detect_contradictions(graph: MultiRelationalGraph, config: ContradictionConfig) -> ContradictionReport:
    contradicted = []
    if len(graph) >= 2:
        for key in sorted(graph.edges):
            score = graph.edges[key].score(config.variant)
            if score < config.theta:
                contradicted.append((key[0], key[1], score))
    hist, candidates = contradiction_histogram(contradicted)
    return ContradictionReport(tuple(contradicted), hist, candidates)


@dataclass(frozen=True)
class Hypothesis:
    node: int
    label: int
    score: float
    attributes: AttributeVector | None


def relabeled_score(graph: MultiRelationalGraph, node: int, label: int, model: CooccurrenceModel,
                    variant: str = "rs_plus_rp") -> float:
    """Sum of edge scores around ``node`` with its label replaced, other nodes fixed."""
    total = 0.0
    for (a, b), obs in graph.observations.items():
        if a == node:
            obs = obs.relabeled(label_i=label)
        elif b == node:
            obs = obs.relabeled(label_j=label)
        else:
            continue
        total += compute_edge(obs, model, a, b).score(variant)
    return total


def generate_hypotheses(graph: MultiRelationalGraph, node: int, model: CooccurrenceModel,
                        attribute_table=None, max_k: int = 3, variant: str = "rs_plus_rp") -> list[Hypothesis]:
    """Alternative labels for ``node`` ranked by how well they restore its edges."""
    if not 0 <= node < len(graph):
        raise IndexError(f"node {node} not in graph")
    variant = normalize_variant(variant)
    current = graph.nodes[node].label
    options = [lab for lab in model.labels if lab != current]
    if not options:
        raise ValueError("no alternative labels")
    scored = [(relabeled_score(graph, node, lab, model, variant), lab) for lab in options]
    scored.sort(key=lambda t: (-t[0], t[1]))
    table = attribute_table or {}
    return [Hypothesis(node, lab, score, table.get(lab)) for score, lab in scored[: max(1, max_k)]]


@dataclass(frozen=True)
class ThetaCalibration:
    theta: float
    accuracy: float
    sweep: tuple[tuple[float, float], ...]

    def report(self) -> str:
        lines = ["theta accuracy"]
        lines.extend(f"{t:.6f} {a:.6f}" for t, a in self.sweep)
        lines.append(f"# selected theta={self.theta:.6f} accuracy={self.accuracy:.6f}")
        return "\n".join(lines) + "\n"


def calibrate_scores(scores, truth, min_accuracy: float = 0.90) -> ThetaCalibration:
    """Sweep the 1/256 grid and keep the threshold with the best edge accuracy.

    Several thresholds can share the best accuracy; the centre of the first
    contiguous run of them is returned.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    if scores.size == 0:
        raise ValueError("empty validation set")
    if scores.shape != truth.shape:
        raise ValueError("one truth value per score required")
    grid = np.arange(1, THETA_STEPS) / THETA_STEPS
    acc = np.array([np.mean((scores < t) == truth) for t in grid])
    best = acc.max()
    hits = np.flatnonzero(acc == best)
    run_end = hits[0]
    while run_end + 1 < grid.size and acc[run_end + 1] == best:
        run_end += 1
    theta = float(grid[(hits[0] + run_end) // 2])
    if best < min_accuracy:
        warnings.warn(f"best contradiction accuracy {best:.3f} is below {min_accuracy:.2f}", stacklevel=2)
    return ThetaCalibration(theta, float(best), tuple(zip(grid.tolist(), acc.tolist())))


def calibrate_theta(validation, variant: str = "rs_plus_rp", min_accuracy: float = 0.90) -> ThetaCalibration:
    """``validation`` holds (graph, truth) pairs; truth maps (l, k) edge keys to bool."""
    variant = normalize_variant(variant)
    scores, labels = [], []
    for graph, truth in validation:
        for key in sorted(graph.edges):
            scores.append(graph.edges[key].score(variant))
            labels.append(bool(truth[key]))
    if not scores:
        raise ValueError("empty validation set")
    return calibrate_scores(scores, labels, min_accuracy)
