"""Seeded synthetic scenes and stub segmentation algorithms.

All randomness comes from numpy's PCG64 generator seeded through
``SeedSequence([root_seed, index])``, so every scene and every corrupted
prediction is a pure function of its seed and index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.signal import correlate

from .imgfeat import RawImage, save_image
from .labelmap import LabelMap, extract_regions, save_label_map

TRAIN, TEST, PLANTED = 0, 1, 2
_SPLIT_NAMES = {TRAIN: "train", TEST: "test", PLANTED: "planted"}
_STRIDE = 1_000_000

_CROSS = ndimage.generate_binary_structure(2, 1)


class SceneError(RuntimeError):
    pass


def rng_for(*keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in keys])))


@dataclass(frozen=True)
class ClassPrior:
    name: str
    color: tuple[int, int, int]
    center: tuple[float, float]
    area: tuple[float, float]
    aspect: tuple[float, float] = (0.7, 1.4)
    shape: str = "rect"


@dataclass(frozen=True)
class SceneSpec:
    """Scene layout priors. Class ids are 1-based positions in ``classes``.

    ``adjacency`` maps an unordered class pair (a, b), a < b, to the
    probability that the two objects touch when both are present.
    """

    width: int = 96
    height: int = 96
    classes: tuple[ClassPrior, ...] = ()
    object_count: tuple[int, int] = (2, 4)
    adjacency: dict[tuple[int, int], float] = field(default_factory=dict)
    jitter: float = 0.08
    noise: float = 18.0
    background: tuple[int, int, int] = (96, 96, 96)
    seed: int = 0
    max_retries: int = 60

    def __post_init__(self):
        if self.object_count[0] < 2:
            raise ValueError("scenes need at least two objects")
        if self.object_count[1] > len(self.classes):
            raise ValueError("more objects requested than classes available")

    def adjacency_probability(self, a: int, b: int) -> float:
        return self.adjacency.get((min(a, b), max(a, b)), 0.0)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(range(1, len(self.classes) + 1))

    def class_names(self) -> dict[int, str]:
        return {i + 1: c.name for i, c in enumerate(self.classes)}


DEFAULT_CLASSES = (
    ClassPrior("kite", (220, 60, 60), (0.25, 0.2), (0.025, 0.045), shape="rect"),
    ClassPrior("lamp", (60, 200, 70), (0.75, 0.2), (0.04, 0.07), shape="ellipse"),
    ClassPrior("chair", (60, 80, 220), (0.25, 0.5), (0.05, 0.08), shape="ellipse"),
    ClassPrior("table", (220, 200, 50), (0.75, 0.5), (0.06, 0.09), shape="rect"),
    ClassPrior("sofa", (190, 60, 200), (0.25, 0.8), (0.08, 0.11), shape="rect"),
    ClassPrior("rug", (50, 200, 210), (0.75, 0.8), (0.10, 0.13), shape="ellipse"),
)

DEFAULT_ADJACENCY = {(1, 3): 0.5, (3, 5): 0.5, (2, 4): 0.5, (4, 6): 0.5}


def default_spec(seed: int = 0) -> SceneSpec:
    return SceneSpec(classes=DEFAULT_CLASSES, adjacency=dict(DEFAULT_ADJACENCY), seed=seed)


def shape_mask(shape: str, h: int, w: int) -> np.ndarray:
    if shape == "rect":
        return np.ones((h, w), dtype=bool)
    if shape == "ellipse":
        yy, xx = np.mgrid[0:h, 0:w]
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        ry, rx = h / 2.0, w / 2.0
        return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    raise ValueError(f"unknown shape {shape!r}")


@dataclass(frozen=True)
class PlacedObject:
    label: int
    top: int
    left: int
    mask: np.ndarray = field(repr=False, compare=False)


def _object_size(rng, prior: ClassPrior, spec: SceneSpec, scale: float) -> tuple[int, int]:
    area = rng.uniform(*prior.area) * spec.width * spec.height * scale
    aspect = rng.uniform(*prior.aspect)
    w = int(np.clip(round(math.sqrt(area * aspect)), 1, spec.width - 2))
    h = int(np.clip(round(area / w), 1, spec.height - 2))
    return h, w


def _overlap(big: np.ndarray, small: np.ndarray) -> np.ndarray:
    # FFT correlation of 0/1 masks; rounding recovers the exact integer counts.
    return np.rint(correlate(big, small, mode="valid", method="fft")).astype(np.int64)


def _valid_offsets(mask: np.ndarray, placed: list[tuple[np.ndarray, bool]], shape) -> np.ndarray:
    """Boolean grid over top-left offsets meeting overlap and contact rules.

    ``placed`` holds (full-size mask, must_touch) for each object already in
    the scene; objects that must not touch keep at least a one-pixel gap.
    """
    H, W = shape
    h, w = mask.shape
    ok = np.ones((H - h + 1, W - w + 1), dtype=bool)
    halo = ndimage.binary_dilation(np.pad(mask, 1), _CROSS).astype(np.int64)
    m = mask.astype(np.int64)
    for other, touch in placed:
        o = other.astype(np.int64)
        ok &= _overlap(o, m) == 0
        contact = _overlap(np.pad(o, 1), halo) > 0
        ok &= contact if touch else ~contact
    return ok


def _compose(spec: SceneSpec, rng, labels: list[int], touch: dict[tuple[int, int], bool],
             overrides: dict[int, tuple[tuple[float, float], float]]) -> list[PlacedObject]:
    H, W = spec.height, spec.width
    for _ in range(spec.max_retries):
        sizes = {}
        for lab in labels:
            _, scale = overrides.get(lab, (None, 1.0))
            sizes[lab] = _object_size(rng, spec.classes[lab - 1], spec, scale)
        order = sorted(labels, key=lambda lab: (-sizes[lab][0] * sizes[lab][1], lab))
        placed: list[PlacedObject] = []
        full_masks: dict[int, np.ndarray] = {}
        for lab in order:
            prior = spec.classes[lab - 1]
            h, w = sizes[lab]
            mask = shape_mask(prior.shape, h, w)
            constraints = [(full_masks[p.label], touch[min(lab, p.label), max(lab, p.label)]) for p in placed]
            ok = _valid_offsets(mask, constraints, (H, W))
            if not ok.any():
                break
            center = overrides.get(lab, (prior.center, 1.0))[0]
            tops, lefts = np.nonzero(ok)
            cy = (tops + (h - 1) / 2.0) / H - center[1]
            cx = (lefts + (w - 1) / 2.0) / W - center[0]
            weight = np.exp(-(cx**2 + cy**2) / (2.0 * spec.jitter**2)) + 1e-12
            pick = rng.choice(tops.size, p=weight / weight.sum())
            obj = PlacedObject(lab, int(tops[pick]), int(lefts[pick]), mask)
            full = np.zeros((H, W), dtype=bool)
            full[obj.top : obj.top + h, obj.left : obj.left + w] = mask
            full_masks[lab] = full
            placed.append(obj)
        else:
            return sorted(placed, key=lambda p: p.label)
    raise SceneError(f"could not place classes {labels} after {spec.max_retries} attempts")


def _render(spec: SceneSpec, rng, objects: list[PlacedObject]) -> tuple[RawImage, LabelMap]:
    H, W = spec.height, spec.width
    labels = np.zeros((H, W), dtype=np.uint8)
    color = np.empty((H, W, 3), dtype=np.float64)
    color[:] = spec.background
    for obj in objects:
        h, w = obj.mask.shape
        sl = (slice(obj.top, obj.top + h), slice(obj.left, obj.left + w))
        labels[sl][obj.mask] = obj.label
        color[sl][obj.mask] = spec.classes[obj.label - 1].color
    color += rng.normal(0.0, spec.noise, size=color.shape)
    pixels = np.clip(np.rint(color), 0, 255).astype(np.uint8)
    return RawImage(pixels), LabelMap(labels)


def _draw_layout(spec: SceneSpec, rng) -> tuple[list[int], dict[tuple[int, int], bool]]:
    lo, hi = spec.object_count
    n = int(rng.integers(lo, hi + 1))
    labels = sorted(int(x) + 1 for x in rng.choice(len(spec.classes), size=n, replace=False))
    touch = {}
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            touch[a, b] = bool(rng.random() < spec.adjacency_probability(a, b))
    return labels, touch


def generate_scene(spec: SceneSpec, index: int) -> tuple[RawImage, LabelMap]:
    rng = rng_for(spec.seed, index)
    labels, touch = _draw_layout(spec, rng)
    objects = _compose(spec, rng, labels, touch, {})
    return _render(spec, rng, objects)


@dataclass(frozen=True)
class PlantedScene:
    image: RawImage
    ground_truth: LabelMap
    label: int
    pixel: tuple[int, int]


def planted_override(prior: ClassPrior, spec: SceneSpec) -> tuple[tuple[float, float], float]:
    """Mirrored position and a strongly changed size for one class."""
    median_area = float(np.median([np.mean(c.area) for c in spec.classes]))
    scale = 3.0 if np.mean(prior.area) < median_area else 1.0 / 3.0
    cx, cy = prior.center
    return (1.0 - cx, 1.0 - cy), scale


def generate_planted_scene(spec: SceneSpec, index: int) -> PlantedScene:
    """A scene where one object is relocated and resized against its priors."""
    rng = rng_for(spec.seed, index)
    labels, touch = _draw_layout(spec, rng)
    target = int(labels[int(rng.integers(len(labels)))])
    override = {target: planted_override(spec.classes[target - 1], spec)}
    objects = _compose(spec, rng, labels, touch, override)
    image, gt = _render(spec, rng, objects)
    obj = next(o for o in objects if o.label == target)
    r, c = np.argwhere(obj.mask)[0]
    return PlantedScene(image, gt, target, (int(obj.left + c), int(obj.top + r)))


@dataclass(frozen=True)
class StubAlgorithm:
    """Corrupts ground truth per class: whole-object mislabels, drops, and erosion."""

    name: str
    mislabel: dict[int, float] = field(default_factory=dict)
    confusion: dict[int, int] = field(default_factory=dict)
    erosion: dict[int, int] = field(default_factory=dict)
    drop: dict[int, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        for table in (self.mislabel, self.drop):
            for c, p in table.items():
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"{self.name}: probability {p} for class {c} outside [0, 1]")
        for c, p in self.mislabel.items():
            if p > 0 and self.confusion.get(c, c) == c:
                raise ValueError(f"{self.name}: class {c} needs a distinct confusion target")


def apply_stub(stub: StubAlgorithm, gt: LabelMap, index: int) -> LabelMap:
    rng = rng_for(stub.seed, index)
    out = gt.labels.copy()
    for region in extract_regions(gt, 4):
        c = region.label
        u_drop, u_mis = rng.random(2)
        mask = region.mask(gt.shape)
        out[mask] = 0
        if u_drop < stub.drop.get(c, 0.0):
            continue
        radius = stub.erosion.get(c, 0)
        if radius > 0:
            mask = ndimage.binary_erosion(mask, _CROSS, iterations=radius)
        new = stub.confusion[c] if u_mis < stub.mislabel.get(c, 0.0) else c
        out[mask] = new
    return LabelMap(out)


def default_stubs(spec: SceneSpec, root_seed: int = 0) -> list[StubAlgorithm]:
    """Three stubs, each strong on its own third of the classes."""
    labels = spec.labels
    confusion = {1: 6, 2: 5, 3: 2, 4: 1, 5: 2, 6: 1}
    groups = [labels[k::3] for k in range(3)]
    names = ("alpha", "beta", "gamma")
    stubs = []
    for k, name in enumerate(names):
        strong = set(groups[k])
        stubs.append(StubAlgorithm(
            name=name,
            mislabel={c: 0.03 if c in strong else 0.40 for c in labels},
            confusion={c: confusion.get(c, labels[(c % len(labels))]) for c in labels},
            erosion={c: 0 if c in strong else 1 for c in labels},
            drop={c: 0.02 if c in strong else 0.05 for c in labels},
            seed=1000 * root_seed + k + 1,
        ))
    return stubs


def scene_index(split: int, i: int) -> int:
    return split * _STRIDE + i


def generate_benchmark(spec: SceneSpec, stubs, n_images: int, out_dir, n_train: int = 0,
                       n_planted: int = 0) -> Path:
    """Write images, ground truth, stub predictions and ``manifest.json``."""
    stubs = list(stubs)
    if len(stubs) < 2:
        raise ValueError("a portfolio needs at least two stubs")
    out = Path(out_dir)
    for sub in ("images", "gt", "pred"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    entries = []
    for split, count in ((TRAIN, n_train), (TEST, n_images)):
        for i in range(count):
            index = scene_index(split, i)
            image_id = f"{_SPLIT_NAMES[split]}{i:04d}"
            image, gt = generate_scene(spec, index)
            save_image(image, out / "images" / f"{image_id}.ppm")
            save_label_map(gt, out / "gt" / f"{image_id}.lbl")
            preds = {}
            for stub in stubs:
                rel = f"pred/{image_id}.{stub.name}.lbl"
                save_label_map(apply_stub(stub, gt, index), out / rel)
                preds[stub.name] = rel
            entries.append({
                "id": image_id,
                "split": _SPLIT_NAMES[split],
                "index": index,
                "image": f"images/{image_id}.ppm",
                "ground_truth": f"gt/{image_id}.lbl",
                "predictions": preds,
            })

    planted = []
    if n_planted:
        (out / "planted").mkdir(exist_ok=True)
    for i in range(n_planted):
        index = scene_index(PLANTED, i)
        image_id = f"planted{i:04d}"
        scene = generate_planted_scene(spec, index)
        save_label_map(scene.ground_truth, out / "planted" / f"{image_id}.lbl")
        planted.append({
            "id": image_id,
            "index": index,
            "ground_truth": f"planted/{image_id}.lbl",
            "planted_label": scene.label,
            "planted_pixel": list(scene.pixel),
        })

    manifest = {
        "version": 1,
        "root": ".",
        "seed": spec.seed,
        "algorithms": [s.name for s in stubs],
        "classes": {str(k): v for k, v in spec.class_names().items()},
        "images": entries,
        "planted": planted,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
