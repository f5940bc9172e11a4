"""Co-occurrence statistics over object pairs and the multi-relational scene graph."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .labelmap import LabelMap, RegionDescriptor, adjacency_matrix, extract_regions

EPS = 1e-6
NEUTRAL = 0.5


def guarded_ratio(a: float, b: float) -> float:
    return max(a, EPS) / max(b, EPS)


def similarity(v: float, mu: float) -> float:
    """Ratio similarity min/max, in (0, 1] and 1 only at equality."""
    lo, hi = (v, mu) if v <= mu else (mu, v)
    if hi <= 0.0:
        return 1.0
    return lo / hi


@dataclass(frozen=True)
class PairObservation:
    label_i: int
    label_j: int
    horizontal: float
    vertical: float
    size: float
    adjacency: int
    guarded: bool = False

    @property
    def weights(self) -> tuple[int, int, int, int]:
        # Ties go to left / up.
        w0 = 1 if self.horizontal <= 1.0 else 0
        w2 = 1 if self.vertical <= 1.0 else 0
        return (w0, 1 - w0, w2, 1 - w2)

    def relabeled(self, label_i: int | None = None, label_j: int | None = None) -> PairObservation:
        return replace(
            self,
            label_i=self.label_i if label_i is None else int(label_i),
            label_j=self.label_j if label_j is None else int(label_j),
        )


def observe_pair(a: RegionDescriptor, b: RegionDescriptor, adjacent: bool,
                 label_a: int | None = None, label_b: int | None = None) -> PairObservation:
    (xa, ya), (xb, yb) = a.centroid, b.centroid
    guarded = min(xa, ya, xb, yb) < EPS
    return PairObservation(
        label_i=a.label if label_a is None else int(label_a),
        label_j=b.label if label_b is None else int(label_b),
        horizontal=guarded_ratio(xa, xb),
        vertical=guarded_ratio(ya, yb),
        size=guarded_ratio(a.area, b.area),
        adjacency=int(bool(adjacent)),
        guarded=guarded,
    )


@dataclass(frozen=True)
class PairStats:
    left: float
    right: float
    up: float
    down: float
    size: float
    proximity: float
    count: int


@dataclass(frozen=True)
class CooccurrenceModel:
    labels: tuple[int, ...]
    pairs: dict[tuple[int, int], PairStats] = field(repr=False)

    def get(self, label_i: int, label_j: int) -> PairStats | None:
        stats = self.pairs.get((int(label_i), int(label_j)))
        if stats is None or stats.count == 0:
            return None
        return stats


class _PairAccumulator:
    __slots__ = ("h", "v", "left", "n_left", "right", "up", "n_up", "down", "size", "prox", "count")

    def __init__(self):
        self.h = self.v = self.left = self.right = self.up = self.down = 0.0
        self.size = self.prox = 0.0
        self.n_left = self.n_up = self.count = 0

    def add(self, obs: PairObservation):
        w0, _, w2, _ = obs.weights
        self.count += 1
        self.h += obs.horizontal
        self.v += obs.vertical
        if w0:
            self.left += obs.horizontal
            self.n_left += 1
        else:
            self.right += obs.horizontal
        if w2:
            self.up += obs.vertical
            self.n_up += 1
        else:
            self.down += obs.vertical
        self.size += obs.size
        self.prox += obs.adjacency

    def stats(self) -> PairStats:
        n = self.count
        mean_h, mean_v = self.h / n, self.v / n
        n_right, n_down = n - self.n_left, n - self.n_up
        # A direction never observed falls back to the pair's overall axis mean.
        return PairStats(
            left=self.left / self.n_left if self.n_left else mean_h,
            right=self.right / n_right if n_right else mean_h,
            up=self.up / self.n_up if self.n_up else mean_v,
            down=self.down / n_down if n_down else mean_v,
            size=self.size / n,
            proximity=self.prox / n,
            count=n,
        )


def scene_observations(regions: list[RegionDescriptor], shape: tuple[int, int],
                       labels=None) -> dict[tuple[int, int], PairObservation]:
    """Observation for every ordered pair of distinct regions, keyed by index pair."""
    if labels is None:
        labels = [r.label for r in regions]
    adj = adjacency_matrix(regions, shape)
    out = {}
    for i, a in enumerate(regions):
        for j, b in enumerate(regions):
            if i != j:
                out[i, j] = observe_pair(a, b, adj[i, j], labels[i], labels[j])
    return out


def train_cooccurrence(maps, connectivity: int = 4, labels=None) -> CooccurrenceModel:
    """Per ordered class pair means of every pair observation in the training maps."""
    acc: dict[tuple[int, int], _PairAccumulator] = {}
    seen: set[int] = set()
    multi = False
    for lmap in maps:
        regions = extract_regions(lmap, connectivity)
        seen.update(r.label for r in regions)
        if len(regions) < 2:
            continue
        multi = True
        for obs in scene_observations(regions, lmap.shape).values():
            acc.setdefault((obs.label_i, obs.label_j), _PairAccumulator()).add(obs)
    if not multi:
        raise ValueError("no training map contains two or more objects")
    label_set = tuple(sorted(seen if labels is None else set(labels) | seen))
    return CooccurrenceModel(label_set, {key: acc[key].stats() for key in sorted(acc)})


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    l: float
    r: float
    u: float
    d: float
    rs: float
    rp: float
    weights: tuple[int, int, int, int]
    position: float
    size_ratio: float
    adjacency: int
    low_evidence: bool = False
    guarded: bool = False

    def score(self, variant: str = "rs_plus_rp") -> float:
        """Averaged relation score; below threshold means a contradiction."""
        w0, w1, w2, w3 = self.weights
        last = self.rp if variant == "rs_plus_rp" else self.rs
        return (w0 * self.l + w1 * self.r + w2 * self.u + w3 * self.d + self.rs + last) / 6.0


def position_value(obs: PairObservation) -> float:
    """Weighted position over the observed ratios, averaged in log space.

    Both horizontal relations observe the x ratio and both vertical ones the
    y ratio, so reversing an edge inverts the value exactly.
    """
    w0, w1, w2, w3 = obs.weights
    log_p = (w0 + w1) * math.log(obs.horizontal) + (w2 + w3) * math.log(obs.vertical)
    return math.exp(log_p / 4.0)


def compute_edge(obs: PairObservation, model: CooccurrenceModel, source: int = 0, target: int = 1) -> Edge:
    stats = model.get(obs.label_i, obs.label_j)
    common = dict(
        source=source,
        target=target,
        weights=obs.weights,
        position=position_value(obs),
        size_ratio=obs.size,
        adjacency=obs.adjacency,
        guarded=obs.guarded,
    )
    if stats is None:
        return Edge(l=NEUTRAL, r=NEUTRAL, u=NEUTRAL, d=NEUTRAL, rs=NEUTRAL, rp=NEUTRAL,
                    low_evidence=True, **common)
    return Edge(
        l=similarity(obs.horizontal, stats.left),
        r=similarity(obs.horizontal, stats.right),
        u=similarity(obs.vertical, stats.up),
        d=similarity(obs.vertical, stats.down),
        rs=similarity(obs.size, stats.size),
        rp=1.0 - abs(obs.adjacency - stats.proximity),
        **common,
    )


@dataclass(frozen=True)
class Node:
    region: RegionDescriptor
    label: int


@dataclass(frozen=True)
class MultiRelationalGraph:
    nodes: tuple[Node, ...]
    edges: dict[tuple[int, int], Edge] = field(repr=False)
    observations: dict[tuple[int, int], PairObservation] = field(repr=False)

    def __len__(self):
        return len(self.nodes)

    def incident(self, node: int) -> list[tuple[int, int]]:
        return [key for key in self.edges if node in key]


def build_graph(regions: list[RegionDescriptor], labels, lmap: LabelMap,
                model: CooccurrenceModel) -> MultiRelationalGraph:
    """Fully connected directed graph over the regions, one edge per ordered pair."""
    labels = [r.label for r in regions] if labels is None else [int(x) for x in labels]
    if len(labels) != len(regions):
        raise ValueError("one label per region required")
    observations = scene_observations(regions, lmap.shape, labels)
    edges = {key: compute_edge(obs, model, *key) for key, obs in observations.items()}
    nodes = tuple(Node(r, lab) for r, lab in zip(regions, labels))
    return MultiRelationalGraph(nodes, edges, observations)


def graph_from_map(lmap: LabelMap, model: CooccurrenceModel, connectivity: int = 4) -> MultiRelationalGraph:
    regions = extract_regions(lmap, connectivity)
    return build_graph(regions, None, lmap, model)


_COOC_MAGIC = "COOC 1"


def save_cooccurrence(model: CooccurrenceModel, path) -> None:
    lines = [_COOC_MAGIC, " ".join(str(x) for x in model.labels)]
    for (i, j), s in sorted(model.pairs.items()):
        vals = (s.left, s.right, s.up, s.down, s.size, s.proximity)
        lines.append(" ".join([str(i), str(j)] + [repr(float(v)) for v in vals] + [str(s.count)]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_cooccurrence(path) -> CooccurrenceModel:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != _COOC_MAGIC:
        raise ValueError(f"{path}: malformed header, expected {_COOC_MAGIC!r}")
    if len(lines) < 2:
        raise ValueError(f"{path}: missing label-set line")
    labels = tuple(int(t) for t in lines[1].split())
    pairs = {}
    for lineno, line in enumerate(lines[2:], start=3):
        toks = line.split()
        if not toks:
            continue
        if len(toks) != 9:
            raise ValueError(f"{path}: line {lineno}: expected 9 fields, got {len(toks)}")
        i, j = int(toks[0]), int(toks[1])
        vals = [float(t) for t in toks[2:8]]
        if not all(np.isfinite(vals)):
            raise ValueError(f"{path}: line {lineno}: non-finite mean")
        pairs[i, j] = PairStats(*vals, count=int(toks[8]))
    return CooccurrenceModel(labels, pairs)
