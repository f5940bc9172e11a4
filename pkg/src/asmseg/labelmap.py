"""Pixel-wise label maps, the LBLMAP text format, and connected object regions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull

BACKGROUND = 0
VOID = 255

_MAGIC = "LBLMAP 1"

_STRUCTURE = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


class LabelMapFormatError(ValueError):
    """Raised when an LBLMAP file cannot be parsed."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class HeaderError(LabelMapFormatError):
    pass


class DimensionMismatchError(LabelMapFormatError):
    pass


class LabelRangeError(LabelMapFormatError):
    pass


def _check_range(values: np.ndarray, max_label: int | None) -> None:
    bad = (values < 0) | (values > VOID)
    if max_label is not None:
        bad |= (values > max_label) & (values != VOID)
    if bad.any():
        raise LabelRangeError(f"label {int(values[bad].flat[0])} out of range")


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Immutable H x W grid of class ids (0 = background, 255 = void)."""

    labels: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.labels)
        if raw.ndim != 2:
            raise ValueError(f"label grid must be 2-D, got shape {raw.shape}")
        if raw.size and not np.issubdtype(raw.dtype, np.integer):
            if not np.all(np.equal(np.mod(raw, 1), 0)):
                raise LabelRangeError("non-integer label")
        _check_range(raw.astype(np.int64), None)
        arr = np.array(raw, dtype=np.uint8, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.labels.shape, self.labels.tobytes()))

    def __repr__(self):
        return f"LabelMap({self.width}x{self.height})"

    def with_labels(self, labels: np.ndarray) -> LabelMap:
        return LabelMap(labels)


def parse_label_map(text: str, max_label: int | None = None) -> LabelMap:
    lines = text.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != _MAGIC:
        raise HeaderError(f"malformed header, expected {_MAGIC!r}", 1)
    if len(lines) < 2:
        raise HeaderError("missing '<width> <height>' line", 2)
    dims = lines[1].split()
    try:
        width, height = (int(tok) for tok in dims)
    except ValueError:
        raise HeaderError(f"malformed header dimensions {lines[1]!r}", 2) from None
    if width < 1 or height < 1:
        raise HeaderError(f"non-positive dimensions {width}x{height}", 2)

    body = lines[2:]
    if len(body) != height:
        raise DimensionMismatchError(
            f"dimension mismatch: expected {height} rows, got {len(body)}",
            3 + min(len(body), height),
        )
    rows = np.empty((height, width), dtype=np.int64)
    for i, line in enumerate(body):
        lineno = i + 3
        toks = line.split()
        if len(toks) != width:
            raise DimensionMismatchError(
                f"dimension mismatch: expected {width} values, got {len(toks)}", lineno
            )
        try:
            rows[i] = [int(t) for t in toks]
        except ValueError:
            raise LabelRangeError(f"non-integer label in {line!r}", lineno) from None
        try:
            _check_range(rows[i], max_label)
        except LabelRangeError as exc:
            raise LabelRangeError(str(exc), lineno) from None
    return LabelMap(rows)


def load_label_map(path, max_label: int | None = None) -> LabelMap:
    return parse_label_map(Path(path).read_text(encoding="ascii"), max_label)


def format_label_map(lmap: LabelMap) -> str:
    out = [_MAGIC, f"{lmap.width} {lmap.height}"]
    out.extend(" ".join(map(str, row)) for row in lmap.labels.tolist())
    return "\n".join(out) + "\n"


def save_label_map(lmap: LabelMap, path) -> None:
    Path(path).write_text(format_label_map(lmap), encoding="ascii")


class AttributeVector(NamedTuple):
    """Ten shape attributes used to represent an object or a label hypothesis."""

    area_ratio: float
    extent: float
    aspect_ratio: float
    eccentricity: float
    orientation: float
    solidity: float
    compactness: float
    centroid_x: float
    centroid_y: float
    perimeter_ratio: float


N_ATTRIBUTES = len(AttributeVector._fields)


@dataclass(frozen=True)
class RegionDescriptor:
    """One connected object. ``runs`` holds (row, first_col, last_col) spans."""

    label: int
    area: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]
    runs: tuple[tuple[int, int, int], ...]
    attributes: AttributeVector | None = field(default=None, compare=False)

    def pixels(self) -> tuple[np.ndarray, np.ndarray]:
        """Row and column indices of every pixel, row-major."""
        ys = np.concatenate([np.full(c1 - c0 + 1, r) for r, c0, c1 in self.runs])
        xs = np.concatenate([np.arange(c0, c1 + 1) for _, c0, c1 in self.runs])
        return ys, xs

    def mask(self, shape: tuple[int, int]) -> np.ndarray:
        out = np.zeros(shape, dtype=bool)
        for r, c0, c1 in self.runs:
            out[r, c0 : c1 + 1] = True
        return out


def _runs_from_mask(mask: np.ndarray) -> tuple[tuple[int, int, int], ...]:
    runs = []
    for r in np.flatnonzero(mask.any(axis=1)):
        row = np.concatenate(([0], mask[r].view(np.int8), [0]))
        edges = np.flatnonzero(np.diff(row))
        runs.extend((int(r), int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2]))
    return tuple(runs)


def region_from_mask(label: int, mask: np.ndarray, image_size: tuple[int, int] | None = None) -> RegionDescriptor:
    """Describe the pixels set in ``mask``; ``image_size`` is (w, h), defaulting to the mask shape."""
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise ValueError("region has no pixels")
    region = RegionDescriptor(
        label=int(label),
        area=int(ys.size),
        centroid=(float(xs.mean()), float(ys.mean())),
        bbox=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
        runs=_runs_from_mask(mask),
    )
    if image_size is None:
        image_size = (mask.shape[1], mask.shape[0])
    attrs = compute_region_attributes(region, image_size)
    return RegionDescriptor(**{**region.__dict__, "attributes": attrs})


def extract_regions(lmap: LabelMap, connectivity: int = 4) -> list[RegionDescriptor]:
    """Connected components of every non-background, non-void label.

    Sorted by label, then area descending, then first pixel in row-major order.
    """
    if connectivity not in _STRUCTURE:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    grid = lmap.labels
    size = (lmap.width, lmap.height)
    found = []
    for label in np.unique(grid):
        if label in (BACKGROUND, VOID):
            continue
        comp, n = ndimage.label(grid == label, structure=_STRUCTURE[connectivity])
        for idx, sl in enumerate(ndimage.find_objects(comp), start=1):
            sub = comp[sl] == idx
            mask = np.zeros(grid.shape, dtype=bool)
            mask[sl] = sub
            found.append(region_from_mask(int(label), mask, size))
    found.sort(key=lambda r: (r.label, -r.area, r.runs[0][0], r.runs[0][1]))
    return found


def boundary_length(mask: np.ndarray) -> int:
    """Number of unit pixel edges between the region and everything else."""
    padded = np.pad(mask, 1).astype(np.int8)
    return int(np.abs(np.diff(padded, axis=0)).sum() + np.abs(np.diff(padded, axis=1)).sum())


def _hull_area(region: RegionDescriptor) -> float:
    # The hull of the pixel squares is spanned by the outer corners of each run.
    pts = []
    for r, c0, c1 in region.runs:
        pts.extend(((c0, r), (c0, r + 1), (c1 + 1, r), (c1 + 1, r + 1)))
    pts = np.unique(np.asarray(pts, dtype=np.int64), axis=0)
    hull = ConvexHull(pts)
    v = pts[hull.vertices]
    # exact shoelace on integer corners
    twice = int(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
    return abs(twice) / 2.0


def _second_moments(ys: np.ndarray, xs: np.ndarray) -> tuple[float, float, float]:
    n = ys.size
    cx = xs.mean()
    cy = ys.mean()
    # Marginal histograms keep mu20 and mu02 bit-identical for transposed shapes.
    xv, xc = np.unique(xs, return_counts=True)
    yv, yc = np.unique(ys, return_counts=True)
    mu20 = float(np.sum(xc * (xv - cx) ** 2) / n)
    mu02 = float(np.sum(yc * (yv - cy) ** 2) / n)
    mu11 = float(np.sum((xs - cx) * (ys - cy)) / n)
    return mu20, mu02, mu11


def eccentricity_orientation(mu20: float, mu02: float, mu11: float) -> tuple[float, float]:
    """Eccentricity and major-axis angle (radians, counter-clockwise, y up)."""
    half_sum = (mu20 + mu02) / 2.0
    spread = math.hypot((mu20 - mu02) / 2.0, mu11)
    if half_sum <= 0.0 or spread <= 1e-12 * half_sum:
        return 0.0, 0.0
    major = half_sum + spread
    minor = half_sum - spread
    if minor <= 1e-12 * major:
        ecc = 1.0
    else:
        ecc = math.sqrt(1.0 - minor / major)
    orientation = -0.5 * math.atan2(2.0 * mu11, mu20 - mu02) + 0.0
    return ecc, orientation


def compute_region_attributes(region: RegionDescriptor, image_size: tuple[int, int]) -> AttributeVector:
    width, height = image_size
    ys, xs = region.pixels()
    area = ys.size
    x0, y0, x1, y1 = region.bbox
    bw, bh = x1 - x0 + 1, y1 - y0 + 1

    local = np.zeros((bh, bw), dtype=bool)
    local[ys - y0, xs - x0] = True
    perimeter = boundary_length(local)

    ecc, orient = eccentricity_orientation(*_second_moments(ys, xs))
    cx, cy = region.centroid
    return AttributeVector(
        area_ratio=area / (width * height),
        extent=area / (bw * bh),
        aspect_ratio=bw / bh,
        eccentricity=ecc,
        orientation=orient,
        solidity=min(1.0, area / _hull_area(region)),
        compactness=4.0 * math.pi * area / perimeter**2,
        centroid_x=(cx + 0.5) / width,
        centroid_y=(cy + 0.5) / height,
        perimeter_ratio=perimeter / math.hypot(width, height),
    )


def region_index_map(regions: list[RegionDescriptor], shape: tuple[int, int]) -> np.ndarray:
    """Per-pixel index into ``regions``, -1 where no region is present."""
    index = np.full(shape, -1, dtype=np.int64)
    for i, region in enumerate(regions):
        for r, c0, c1 in region.runs:
            index[r, c0 : c1 + 1] = i
    return index


def adjacency_matrix(regions: list[RegionDescriptor], shape: tuple[int, int]) -> np.ndarray:
    """Boolean n x n matrix, True where two regions have 4-neighbouring pixels."""
    n = len(regions)
    adj = np.zeros((n, n), dtype=bool)
    index = region_index_map(regions, shape)
    for a, b in ((index[:, :-1], index[:, 1:]), (index[:-1, :], index[1:, :])):
        sel = (a >= 0) & (b >= 0) & (a != b)
        adj[a[sel], b[sel]] = True
    return adj | adj.T
