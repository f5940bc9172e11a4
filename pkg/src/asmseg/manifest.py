"""Dataset manifests (JSON) naming images, ground truth and per-algorithm predictions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    split: str = "test"
    index: int = 0
    image: Path | None = None
    ground_truth: Path | None = None
    predictions: dict[str, Path] = field(default_factory=dict)
    features: Path | None = None


@dataclass(frozen=True)
class PlantedEntry:
    id: str
    ground_truth: Path
    pixel: tuple[int, int]
    index: int = 0
    label: int | None = None


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    algorithms: tuple[str, ...]
    entries: tuple[ManifestEntry, ...]
    planted: tuple[PlantedEntry, ...] = ()
    classes: dict[int, str] = field(default_factory=dict)

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def class_names(self) -> dict[int, str]:
        return {0: "background", **self.classes}


def _resolve(root: Path, value, entry_id: str, what: str) -> Path | None:
    if value is None:
        return None
    path = root / value
    if not path.exists():
        raise ManifestError(f"entry {entry_id!r}: dangling {what} path {str(value)!r}")
    return path


def parse_manifest(path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest {str(path)!r} not found")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {str(path)!r} is not valid JSON: {exc}") from None
    root = (path.parent / data.get("root", ".")).resolve()
    raw_entries = data.get("images", [])
    algorithms = data.get("algorithms")
    if algorithms is None:
        algorithms = sorted(raw_entries[0].get("predictions", {})) if raw_entries else []
    algorithms = tuple(algorithms)

    entries = []
    seen = set()
    for n, raw in enumerate(raw_entries, start=1):
        entry_id = str(raw.get("id", f"#{n}"))
        if entry_id in seen:
            raise ManifestError(f"entry {entry_id!r}: duplicate id")
        seen.add(entry_id)
        preds = raw.get("predictions", {})
        if set(preds) != set(algorithms):
            missing = sorted(set(algorithms) - set(preds))
            extra = sorted(set(preds) - set(algorithms))
            raise ManifestError(
                f"entry {n} ({entry_id!r}): inconsistent algorithm set "
                f"(missing {missing}, unexpected {extra})"
            )
        entries.append(ManifestEntry(
            id=entry_id,
            split=str(raw.get("split", "test")),
            index=int(raw.get("index", n - 1)),
            image=_resolve(root, raw.get("image"), entry_id, "image"),
            ground_truth=_resolve(root, raw.get("ground_truth"), entry_id, "ground-truth"),
            predictions={a: _resolve(root, preds[a], entry_id, f"prediction {a!r}") for a in algorithms},
            features=_resolve(root, raw.get("features"), entry_id, "feature sidecar"),
        ))

    planted = []
    for raw in data.get("planted", []):
        entry_id = str(raw["id"])
        x, y = raw["planted_pixel"]
        planted.append(PlantedEntry(
            id=entry_id,
            ground_truth=_resolve(root, raw["ground_truth"], entry_id, "ground-truth"),
            pixel=(int(x), int(y)),
            index=int(raw.get("index", 0)),
            label=raw.get("planted_label"),
        ))
    classes = {int(k): str(v) for k, v in data.get("classes", {}).items()}
    return DatasetManifest(root, algorithms, tuple(entries), tuple(planted), classes)
