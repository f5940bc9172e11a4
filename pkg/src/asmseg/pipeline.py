"""The iterative selection loop: select, reason about contradictions, re-select, merge."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .evalrep import image_mean_iou
from .imgfeat import FeatureConfig, RawImage, extract_image_features
from .labelmap import LabelMap, RegionDescriptor, extract_regions, load_label_map
from .reasoning import ContradictionConfig, detect_contradictions, generate_hypotheses
from .relations import CooccurrenceModel, build_graph
from .selection import NoMoreAlgorithms, SelectionSample, Selector, select_algorithm
from .synth import StubAlgorithm, apply_stub

REASONS = ("no-contradictions", "algorithms-exhausted", "max-iterations")


class BackendError(RuntimeError):
    def __init__(self, backend: str, iteration: int, cause: Exception):
        self.backend = backend
        self.iteration = iteration
        super().__init__(f"backend {backend!r} failed at iteration {iteration}: {cause}")


@dataclass(frozen=True)
class ImageRef:
    id: str
    index: int = 0


def _mask_window(lmap: LabelMap, window) -> LabelMap:
    if window is None:
        return lmap
    x0, y0, x1, y1 = window
    out = np.zeros(lmap.shape, dtype=np.uint8)
    out[y0 : y1 + 1, x0 : x1 + 1] = lmap.labels[y0 : y1 + 1, x0 : x1 + 1]
    return LabelMap(out)


class PrecomputedBackend:
    """Serves label maps stored on disk, keyed by image id."""

    def __init__(self, name: str, paths: dict[str, Path]):
        self.name = name
        self.paths = dict(paths)
        self._cache: dict[str, LabelMap] = {}

    def __call__(self, ref: ImageRef, window=None) -> LabelMap:
        if ref.id not in self._cache:
            self._cache[ref.id] = load_label_map(self.paths[ref.id])
        return _mask_window(self._cache[ref.id], window)


class StubBackend:
    """Runs a stub algorithm on the ground truth supplied by ``ground_truth(ref)``."""

    def __init__(self, stub: StubAlgorithm, ground_truth):
        self.name = stub.name
        self.stub = stub
        self.ground_truth = ground_truth

    def __call__(self, ref: ImageRef, window=None) -> LabelMap:
        return _mask_window(apply_stub(self.stub, self.ground_truth(ref), ref.index), window)


class Portfolio:
    def __init__(self, backends):
        self.backends = list(backends)
        if len(self.backends) < 2:
            raise ValueError("a portfolio needs at least two algorithms")

    def __len__(self):
        return len(self.backends)

    @property
    def names(self) -> list[str]:
        return [b.name for b in self.backends]

    def run(self, algorithm: int, ref: ImageRef, window=None, iteration: int = 0,
            shape: tuple[int, int] | None = None) -> LabelMap:
        backend = self.backends[algorithm]
        try:
            out = backend(ref, window)
        except Exception as exc:
            raise BackendError(backend.name, iteration, exc) from exc
        if shape is not None and out.shape != shape:
            raise BackendError(backend.name, iteration, ValueError(f"output shape {out.shape} != {shape}"))
        return out


def merge_segmentations(base: LabelMap, patch: LabelMap, region) -> LabelMap:
    """Copy of ``base`` with the pixels of ``region`` taken from ``patch``."""
    if base.shape != patch.shape:
        raise ValueError(f"dimension mismatch: {base.shape} vs {patch.shape}")
    mask = region.mask(base.shape) if isinstance(region, RegionDescriptor) else np.asarray(region, dtype=bool)
    if mask.shape != base.shape:
        raise ValueError(f"region shape {mask.shape} does not match image {base.shape}")
    out = base.labels.copy()
    out[mask] = patch.labels[mask]
    return LabelMap(out)


def dilated_window(bbox, shape: tuple[int, int], margin: float = 0.1) -> tuple[int, int, int, int]:
    x0, y0, x1, y1 = bbox
    dx = int(round(margin * (x1 - x0 + 1)))
    dy = int(round(margin * (y1 - y0 + 1)))
    h, w = shape
    return (max(0, x0 - dx), max(0, y0 - dy), min(w - 1, x1 + dx), min(h - 1, y1 + dy))


@dataclass(frozen=True)
class AsmConfig:
    theta: float = 0.5
    variant: str = "rs_plus_rp"
    max_iterations: int = 10
    connectivity: int = 4
    max_hypotheses: int = 3
    window_margin: float = 0.1
    features: FeatureConfig = field(default_factory=FeatureConfig)

    @property
    def contradiction(self) -> ContradictionConfig:
        return ContradictionConfig(self.theta, self.variant)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    node: int
    region_label: int
    region_pixels: int
    hypothesis: int
    hypothesis_score: float
    algorithm: int
    outcome: str
    contradictions_before: int
    contradictions_after: int
    merged_pixels: int


@dataclass
class AsmTrace:
    image_id: str
    initial_algorithm: int
    initial_contradictions: int = 0
    records: list[IterationRecord] = field(default_factory=list)
    reason: str = ""
    final_contradictions: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> AsmTrace:
        data = json.loads(text)
        data["records"] = [IterationRecord(**r) for r in data["records"]]
        return cls(**data)

    @property
    def accepted(self) -> list[IterationRecord]:
        return [r for r in self.records if r.outcome == "accepted"]


@dataclass(frozen=True)
class SelectorPair:
    first: Selector
    second: Selector


def _analyze(lmap: LabelMap, model: CooccurrenceModel, config: AsmConfig):
    regions = extract_regions(lmap, config.connectivity)
    graph = build_graph(regions, None, lmap, model)
    return graph, detect_contradictions(graph, config.contradiction)


def _node_order(report) -> list[int]:
    # Top-count candidates first, then the remaining contradicted nodes.
    rest = sorted((n for n in report.histogram if n not in report.candidates),
                  key=lambda n: (-report.histogram[n], n))
    return list(report.candidates) + rest


def run_asm(ref: ImageRef, image: RawImage, portfolio: Portfolio, selectors: SelectorPair,
            model: CooccurrenceModel, attribute_table, config: AsmConfig | None = None,
            features=None):
    """Run the selection loop on one image; returns the final map and its trace.

    ``features`` overrides the whole-image feature vector used by the first
    selector (e.g. when external features were appended at training time).
    """
    config = config or AsmConfig()
    shape = (image.height, image.width)
    if features is None:
        features = extract_image_features(image, None, config.features)
    first = select_algorithm(selectors.first, features)
    current = portfolio.run(first, ref, None, 0, shape)
    source = np.full(shape, first, dtype=np.int64)
    graph, report = _analyze(current, model, config)
    trace = AsmTrace(ref.id, first, report.count)
    tried: dict[tuple, set[int]] = {}
    iteration = 0

    while not trace.reason:
        if report.count == 0:
            trace.reason = "no-contradictions"
            break
        if iteration >= config.max_iterations:
            trace.reason = "max-iterations"
            break
        attempted = accepted = False
        for node in _node_order(report):
            region = graph.nodes[node].region
            mask = region.mask(shape)
            owner = int(Counter(source[mask].tolist()).most_common(1)[0][0])
            done = tried.setdefault(region.runs, {owner})
            window = dilated_window(region.bbox, shape, config.window_margin)
            local = extract_image_features(image, window, config.features)
            hypotheses = generate_hypotheses(graph, node, model, attribute_table,
                                             config.max_hypotheses, config.variant)
            for hyp in hypotheses:
                if iteration >= config.max_iterations:
                    break
                try:
                    alg = select_algorithm(selectors.second, local, hyp, done)
                except NoMoreAlgorithms:
                    break
                done.add(alg)
                attempted = True
                iteration += 1
                patch = portfolio.run(alg, ref, window, iteration, shape)
                before = report.count
                after = before
                merged_pixels = 0
                if not patch.labels[mask].any():
                    outcome = "background-only"
                else:
                    merged = merge_segmentations(current, patch, mask)
                    if merged == current:
                        outcome = "no-change"
                    else:
                        new_graph, new_report = _analyze(merged, model, config)
                        after = new_report.count
                        if after <= before:
                            outcome = "accepted"
                            current, graph, report = merged, new_graph, new_report
                            source[mask] = alg
                            merged_pixels = int(mask.sum())
                            accepted = True
                        else:
                            outcome = "reverted"
                trace.records.append(IterationRecord(
                    iteration=iteration,
                    node=node,
                    region_label=region.label,
                    region_pixels=region.area,
                    hypothesis=hyp.label,
                    hypothesis_score=hyp.score,
                    algorithm=alg,
                    outcome=outcome,
                    contradictions_before=before,
                    contradictions_after=after,
                    merged_pixels=merged_pixels,
                ))
                if accepted:
                    break
            if accepted or iteration >= config.max_iterations:
                break
        if not attempted and iteration < config.max_iterations:
            trace.reason = "algorithms-exhausted"

    trace.final_contradictions = report.count
    return current, trace


def run_oracle(ref: ImageRef, portfolio: Portfolio, gt: LabelMap) -> tuple[int, LabelMap]:
    """Backend whose full-image output has the best mean IoU (ties: lowest index)."""
    best, best_map, best_score = 0, None, -1.0
    for a in range(len(portfolio)):
        out = portfolio.run(a, ref, None, 0, gt.shape)
        score = image_mean_iou(out, gt)
        if score > best_score:
            best, best_map, best_score = a, out, score
    return best, best_map


def _best(qualities: np.ndarray) -> int:
    return int(np.argmax(qualities))


def whole_image_sample(image: RawImage, gt: LabelMap, predictions, config: FeatureConfig | None = None,
                       features=None) -> SelectionSample:
    """Training case for the first selection: image features and per-algorithm mean IoU."""
    q = np.array([image_mean_iou(p, gt) for p in predictions])
    feats = features if features is not None else extract_image_features(image, None, config)
    return SelectionSample(feats, None, _best(q), None, q)


def window_iou(pred: LabelMap, gt: LabelMap, label: int, window) -> float:
    x0, y0, x1, y1 = window
    p = pred.labels[y0 : y1 + 1, x0 : x1 + 1] == label
    g = gt.labels[y0 : y1 + 1, x0 : x1 + 1] == label
    union = np.count_nonzero(p | g)
    return np.count_nonzero(p & g) / union if union else 0.0


def region_samples(image: RawImage, gt: LabelMap, predictions, attribute_table,
                   connectivity: int = 4, config: FeatureConfig | None = None,
                   margin: float = 0.1) -> list[SelectionSample]:
    """One training case per ground-truth object, described by its class attributes."""
    out = []
    for region in extract_regions(gt, connectivity):
        window = dilated_window(region.bbox, gt.shape, margin)
        q = np.array([window_iou(p, gt, region.label, window) for p in predictions])
        feats = extract_image_features(image, window, config)
        attrs = attribute_table.get(region.label) if attribute_table else None
        out.append(SelectionSample(feats, attrs, _best(q), region.label, q))
    return out
