"""Per-class intersection over union, dataset tables, and text reports."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .labelmap import VOID, LabelMap


def iou_per_class(pred: LabelMap, gt: LabelMap, ignore=(VOID,)) -> dict[int, tuple[int, int]]:
    """(intersection, union) pixel counts for every class seen in either map."""
    if pred.shape != gt.shape:
        raise ValueError(f"dimension mismatch: {pred.shape} vs {gt.shape}")
    p = pred.labels.ravel()
    g = gt.labels.ravel()
    keep = np.ones(p.shape, dtype=bool)
    for lab in ignore:
        keep &= (g != lab) & (p != lab)
    p, g = p[keep].astype(np.int64), g[keep].astype(np.int64)
    inter = np.bincount(g[p == g], minlength=256)
    union = np.bincount(p, minlength=256) + np.bincount(g, minlength=256) - inter
    return {int(c): (int(inter[c]), int(union[c])) for c in np.flatnonzero(union)}


def image_mean_iou(pred: LabelMap, gt: LabelMap, ignore=(VOID,)) -> float:
    counts = iou_per_class(pred, gt, ignore)
    if not counts:
        return 0.0
    return float(np.mean([i / u for i, u in counts.values()]))


@dataclass(frozen=True)
class ClassScoreTable:
    classes: tuple[int, ...]
    intersection: dict[int, int]
    union: dict[int, int]

    def iou(self, c: int) -> float | None:
        u = self.union.get(c, 0)
        return None if u == 0 else self.intersection.get(c, 0) / u

    def present(self) -> list[int]:
        return [c for c in self.classes if self.union.get(c, 0) > 0]

    @property
    def average(self) -> float | None:
        present = self.present()
        if not present:
            return None
        return float(np.mean([self.iou(c) for c in present]))


def evaluate_dataset(runs, classes=None, ignore=(VOID,)) -> ClassScoreTable:
    """Accumulate counts over all images before dividing."""
    runs = list(runs)
    if not runs:
        raise ValueError("empty evaluation set")
    inter: dict[int, int] = {}
    union: dict[int, int] = {}
    for pred, gt in runs:
        for c, (i, u) in iou_per_class(pred, gt, ignore).items():
            inter[c] = inter.get(c, 0) + i
            union[c] = union.get(c, 0) + u
    all_classes = set(union) if classes is None else set(classes) | set(union)
    return ClassScoreTable(tuple(sorted(all_classes)), inter, union)


def _pct(v: float | None) -> str:
    return "--" if v is None else f"{100.0 * v:.3f}%"


def _best(values: list[float | None], names: list[str]) -> str:
    best, who = None, "--"
    for v, name in zip(values, names):
        if v is not None and (best is None or v > best):
            best, who = v, name
    return who


def emit_report(tables, class_names=None, title: str = "Per-class intersection/union") -> str:
    """Aligned text table: one row per class, a best-method column, and an average row."""
    tables = list(tables)
    if not tables:
        raise ValueError("need at least one score table")
    names = [name for name, _ in tables]
    class_names = class_names or {}
    classes = sorted(set().union(*(t.classes for _, t in tables)))

    rows = []
    for c in classes:
        vals = [t.iou(c) if c in t.classes else None for _, t in tables]
        rows.append([f"{class_names.get(c, str(c))}:"] + [_pct(v) for v in vals] + [_best(vals, names)])
    averages = [t.average for _, t in tables]
    rows.append(["Average accuracy:"] + [_pct(v) for v in averages] + [_best(averages, names)])
    header = ["class"] + names + ["Best"]

    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]

    def fmt(r):
        return "  ".join([r[0].ljust(widths[0])] + [r[i].rjust(widths[i]) for i in range(1, len(r))]).rstrip()

    sep = "-" * len(fmt(header))
    out = [title, sep, fmt(header), sep]
    out.extend(fmt(r) for r in rows[:-1])
    out.append(sep)
    out.append(fmt(rows[-1]))
    if all(v is None for v in averages):
        out.append("WARNING: every class is absent; no average available")
    return "\n".join(out) + "\n"


def format_scores(table: ClassScoreTable) -> str:
    """Machine-readable companion: 'class intersection union iou' per line."""
    lines = []
    for c in table.classes:
        iou = table.iou(c)
        lines.append(f"{c} {table.intersection.get(c, 0)} {table.union.get(c, 0)} "
                     f"{'--' if iou is None else repr(iou)}")
    return "\n".join(lines) + "\n"


def parse_scores(text: str) -> ClassScoreTable:
    classes, inter, union = [], {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = line.split()
        if not toks:
            continue
        if len(toks) != 4:
            raise ValueError(f"line {lineno}: expected 'class intersection union iou'")
        c = int(toks[0])
        classes.append(c)
        if int(toks[2]):
            inter[c] = int(toks[1])
            union[c] = int(toks[2])
    return ClassScoreTable(tuple(sorted(classes)), inter, union)


def save_scores(table: ClassScoreTable, path) -> None:
    Path(path).write_text(format_scores(table))


def load_scores(path) -> ClassScoreTable:
    return parse_scores(Path(path).read_text())
