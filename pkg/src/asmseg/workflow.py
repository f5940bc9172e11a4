"""Dataset-level training, batch runs, and evaluation over a manifest."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig, load_config, save_config
from .evalrep import ClassScoreTable, emit_report, evaluate_dataset, save_scores
from .imgfeat import (
    FeatureVector,
    load_attribute_table,
    load_external_features,
    load_image,
    save_attribute_table,
    train_class_attribute_model,
)
from .labelmap import extract_regions, load_label_map, save_label_map
from .manifest import DatasetManifest, ManifestEntry
from .pipeline import (
    AsmTrace,
    ImageRef,
    Portfolio,
    PrecomputedBackend,
    SelectorPair,
    region_samples,
    run_asm,
    run_oracle,
    whole_image_sample,
)
from .reasoning import ThetaCalibration, calibrate_theta
from .relations import CooccurrenceModel, graph_from_map, load_cooccurrence, save_cooccurrence, train_cooccurrence
from .selection import load_selector, save_selector, train_selector

log = logging.getLogger(__name__)

COOC_FILE = "cooccurrence.txt"
ATTR_FILE = "attributes.txt"
CALIBRATION_FILE = "calibration.txt"
CONFIG_FILE = "run.cfg"
FIRST_FILE = "selector.first.txt"
SECOND_FILE = "selector.second.txt"


class MissingModelError(FileNotFoundError):
    pass


def training_entries(manifest: DatasetManifest, split: str = "train") -> list[ManifestEntry]:
    entries = [e for e in manifest.split(split) if e.ground_truth is not None]
    if not entries:
        raise ValueError(f"manifest has no {split!r} entries with ground truth")
    return entries


def train_relations(manifest: DatasetManifest, connectivity: int = 4, split: str = "train") -> CooccurrenceModel:
    maps = [load_label_map(e.ground_truth) for e in training_entries(manifest, split)]
    return train_cooccurrence(maps, connectivity, labels=manifest.classes or None)


def train_attributes(manifest: DatasetManifest, connectivity: int = 4, split: str = "train"):
    regions = []
    for e in training_entries(manifest, split):
        regions.extend((r.label, r.attributes) for r in extract_regions(load_label_map(e.ground_truth), connectivity))
    return train_class_attribute_model(regions)


def planted_validation(manifest: DatasetManifest, model: CooccurrenceModel, connectivity: int = 4):
    """(graph, edge truth) pairs; edges touching the planted object are contradictions."""
    if not manifest.planted:
        raise ValueError("manifest has no planted-contradiction entries")
    out = []
    for p in manifest.planted:
        lmap = load_label_map(p.ground_truth)
        graph = graph_from_map(lmap, model, connectivity)
        x, y = p.pixel
        hit = [i for i, n in enumerate(graph.nodes) if n.region.mask(lmap.shape)[y, x]]
        if not hit:
            raise ValueError(f"planted entry {p.id!r}: pixel {p.pixel} is not inside an object")
        out.append((graph, {key: hit[0] in key for key in graph.edges}))
    return out


def calibrate(manifest: DatasetManifest, model: CooccurrenceModel, variant: str = "rs_plus_rp",
              connectivity: int = 4) -> ThetaCalibration:
    return calibrate_theta(planted_validation(manifest, model, connectivity), variant)


def entry_features(entry: ManifestEntry, image, config: RunConfig) -> FeatureVector:
    from .imgfeat import extract_image_features

    feats = extract_image_features(image, None, config.features)
    if entry.features is not None:
        sidecar = load_external_features(entry.features, [("external", _count_lines(entry.features))])
        feats = feats.concat(sidecar)
    return feats


def _count_lines(path: Path) -> int:
    return sum(1 for line in Path(path).read_text().splitlines() if line.strip())


def selection_samples(manifest: DatasetManifest, attributes, config: RunConfig, split: str = "train"):
    """Whole-image and per-object training cases with per-algorithm qualities."""
    whole, regional = [], []
    for e in training_entries(manifest, split):
        image = load_image(e.image)
        gt = load_label_map(e.ground_truth)
        preds = [load_label_map(e.predictions[a]) for a in manifest.algorithms]
        whole.append(whole_image_sample(image, gt, preds, config.features, entry_features(e, image, config)))
        regional.extend(region_samples(image, gt, preds, attributes, config.connectivity, config.features))
    return whole, regional


def train_selector_pair(manifest: DatasetManifest, attributes, config: RunConfig, split: str = "train") -> SelectorPair:
    whole, regional = selection_samples(manifest, attributes, config, split)
    n = len(manifest.algorithms)
    first_kind, second_kind = config.selector_pair
    # The first pass sees whole images only; the second sees object windows with attributes.
    first = train_selector(first_kind, whole, n, seed=config.seed)
    second = train_selector(second_kind, regional, n, seed=config.seed + 17)
    return SelectorPair(first, second)


@dataclass(frozen=True)
class Models:
    cooccurrence: CooccurrenceModel
    attributes: dict
    selectors: SelectorPair
    config: RunConfig

    @classmethod
    def load(cls, model_dir, config: RunConfig | None = None) -> Models:
        d = Path(model_dir)
        needed = {"co-occurrence model": COOC_FILE, "attribute table": ATTR_FILE,
                  "first selector": FIRST_FILE, "second selector": SECOND_FILE}
        for what, name in needed.items():
            if not (d / name).exists():
                raise MissingModelError(f"no trained {what} at {d / name}")
        if config is None:
            config = load_config(d / CONFIG_FILE) if (d / CONFIG_FILE).exists() else RunConfig()
        return cls(
            load_cooccurrence(d / COOC_FILE),
            load_attribute_table(d / ATTR_FILE),
            SelectorPair(load_selector(d / FIRST_FILE), load_selector(d / SECOND_FILE)),
            config,
        )


def train_all(manifest: DatasetManifest, model_dir, config: RunConfig) -> tuple[RunConfig, ThetaCalibration | None]:
    """Train every model into ``model_dir``; theta is calibrated when planted data exists."""
    d = Path(model_dir)
    d.mkdir(parents=True, exist_ok=True)
    cooc = train_relations(manifest, config.connectivity)
    save_cooccurrence(cooc, d / COOC_FILE)
    attrs = train_attributes(manifest, config.connectivity)
    save_attribute_table(attrs, d / ATTR_FILE)
    calibration = None
    if manifest.planted:
        calibration = calibrate(manifest, cooc, config.variant, config.connectivity)
        (d / CALIBRATION_FILE).write_text(calibration.report())
        config = config.updated(theta=calibration.theta)
    save_config(config, d / CONFIG_FILE)
    pair = train_selector_pair(manifest, attrs, config)
    save_selector(pair.first, d / FIRST_FILE)
    save_selector(pair.second, d / SECOND_FILE)
    return config, calibration


def build_portfolio(manifest: DatasetManifest) -> Portfolio:
    backends = []
    for a in manifest.algorithms:
        backends.append(PrecomputedBackend(a, {e.id: e.predictions[a] for e in manifest.entries}))
    return Portfolio(backends)


_WORKER: dict = {}


def _run_one(entry: ManifestEntry, manifest: DatasetManifest, models: Models, portfolio: Portfolio):
    image = load_image(entry.image)
    ref = ImageRef(entry.id, entry.index)
    return run_asm(ref, image, portfolio, models.selectors, models.cooccurrence, models.attributes,
                   models.config.asm(), entry_features(entry, image, models.config))


def _worker_init(manifest, model_dir, config):
    _WORKER["manifest"] = manifest
    _WORKER["models"] = Models.load(model_dir, config)
    _WORKER["portfolio"] = build_portfolio(manifest)


def _worker_run(entry):
    out, trace = _run_one(entry, _WORKER["manifest"], _WORKER["models"], _WORKER["portfolio"])
    return entry.id, out, trace


def run_dataset(manifest: DatasetManifest, model_dir, out_dir, config: RunConfig | None = None,
                split: str = "test", jobs: int = 1) -> dict[str, AsmTrace]:
    """Run the selection loop on every entry of ``split``; writes maps and traces."""
    models = Models.load(model_dir, config)
    entries = [e for e in manifest.split(split) if e.image is not None]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if jobs > 1:
        with ProcessPoolExecutor(jobs, initializer=_worker_init,
                                 initargs=(manifest, model_dir, models.config)) as pool:
            results = list(pool.map(_worker_run, entries))
    else:
        portfolio = build_portfolio(manifest)
        results = [(e.id, *_run_one(e, manifest, models, portfolio)) for e in entries]
    traces = {}
    for image_id, lmap, trace in results:
        save_label_map(lmap, out / f"{image_id}.asm.lbl")
        (out / f"{image_id}.trace.json").write_text(trace.to_json())
        traces[image_id] = trace
        log.info("%s: %s after %d attempts", image_id, trace.reason, len(trace.records))
    return traces


def evaluate_methods(manifest: DatasetManifest, run_dir=None, split: str = "test",
                     oracle: bool = True) -> list[tuple[str, ClassScoreTable]]:
    """Score tables for every algorithm, the oracle selection, and the loop output."""
    entries = [e for e in manifest.split(split) if e.ground_truth is not None]
    if not entries:
        raise ValueError(f"manifest has no {split!r} entries with ground truth")
    classes = sorted(manifest.class_names())
    gts = {e.id: load_label_map(e.ground_truth) for e in entries}
    tables = []
    for a in manifest.algorithms:
        runs = [(load_label_map(e.predictions[a]), gts[e.id]) for e in entries]
        tables.append((a, evaluate_dataset(runs, classes)))
    if oracle:
        portfolio = build_portfolio(manifest)
        runs = [(run_oracle(ImageRef(e.id, e.index), portfolio, gts[e.id])[1], gts[e.id]) for e in entries]
        tables.append(("ORACLE", evaluate_dataset(runs, classes)))
    if run_dir is not None:
        runs = [(load_label_map(Path(run_dir) / f"{e.id}.asm.lbl"), gts[e.id]) for e in entries]
        tables.append(("ASM", evaluate_dataset(runs, classes)))
    return tables


def write_evaluation(tables, manifest: DatasetManifest, out_path) -> str:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    text = emit_report(tables, manifest.class_names())
    out_path.write_text(text)
    for name, table in tables:
        save_scores(table, out_path.with_name(f"{out_path.stem}.{name}.scores"))
    return text
