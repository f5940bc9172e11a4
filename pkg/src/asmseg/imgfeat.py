"""Handcrafted image feature histograms and per-class attribute means."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .labelmap import N_ATTRIBUTES, AttributeVector


class FeatureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RawImage:
    """H x W x 3 uint8 RGB pixels."""

    pixels: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.pixels)
        if raw.ndim != 3 or raw.shape[2] != 3:
            raise ValueError(f"expected H x W x 3 pixels, got shape {raw.shape}")
        if raw.dtype != np.uint8:
            if raw.size and (raw.min() < 0 or raw.max() > 255):
                raise ValueError("channel values must lie in [0, 255]")
            raw = raw.astype(np.uint8)
        arr = np.array(raw, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def crop(self, window) -> RawImage:
        x0, y0, x1, y1 = window
        return RawImage(self.pixels[y0 : y1 + 1, x0 : x1 + 1])


def load_image(path) -> RawImage:
    with Image.open(path) as im:
        return RawImage(np.asarray(im.convert("RGB")))


def save_image(image: RawImage, path) -> None:
    Image.fromarray(np.asarray(image.pixels), mode="RGB").save(path, format="PPM")


@dataclass(frozen=True)
class FeatureConfig:
    color_bins: int = 64
    brightness_bins: int = 64
    contrast_bins: int = 64
    fft_bins: int = 64
    normalized: bool = True

    def layout(self) -> tuple[tuple[str, int], ...]:
        return (
            ("color_r", self.color_bins),
            ("color_g", self.color_bins),
            ("color_b", self.color_bins),
            ("brightness", self.brightness_bins),
            ("contrast", self.contrast_bins),
            ("fft", self.fft_bins),
        )


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    layout: tuple[tuple[str, int], ...]

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True).ravel()
        layout = tuple((str(name), int(bins)) for name, bins in self.layout)
        expected = sum(b for _, b in layout)
        if vals.size != expected:
            raise FeatureError(f"length mismatch: layout needs {expected} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise FeatureError("feature vector contains non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "layout", layout)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.values, other.values)

    def block(self, name: str) -> np.ndarray:
        start = 0
        for block_name, bins in self.layout:
            if block_name == name:
                return self.values[start : start + bins]
            start += bins
        raise KeyError(name)

    def concat(self, other: FeatureVector) -> FeatureVector:
        return FeatureVector(np.concatenate([self.values, other.values]), self.layout + other.layout)


def luma(pixels: np.ndarray) -> np.ndarray:
    """Integer luma (r + 2g + b) // 4."""
    p = pixels.astype(np.int32)
    return (p[..., 0] + 2 * p[..., 1] + p[..., 2]) // 4


# Largest forward-difference gradient magnitude of an 8-bit channel.
CONTRAST_MAX = 255.0 * math.sqrt(2.0)
# Magnitudes are divided by the pixel count, so log1p lies in [0, log(256)].
FFT_LOG_MAX = math.log1p(255.0)


def contrast_map(y: np.ndarray) -> np.ndarray:
    gx = np.zeros(y.shape)
    gy = np.zeros(y.shape)
    gx[:, :-1] = np.diff(y, axis=1)
    gy[:-1, :] = np.diff(y, axis=0)
    return np.hypot(gx, gy)


def fft_log_magnitude(y: np.ndarray) -> np.ndarray:
    spectrum = np.fft.fftshift(np.fft.fft2(y.astype(np.float64)))
    return np.log1p(np.abs(spectrum) / y.size)


def _hist(samples: np.ndarray, bins: int, hi: float, normalized: bool) -> np.ndarray:
    counts, _ = np.histogram(samples, bins=bins, range=(0.0, hi))
    counts = counts.astype(np.float64)
    return counts / counts.sum() if normalized else counts


def extract_image_features(image: RawImage, window=None, config: FeatureConfig | None = None) -> FeatureVector:
    """Colour, brightness, contrast and FFT-magnitude histograms of an image or window.

    ``window`` is an inclusive (x0, y0, x1, y1) box. Extraction over a window is
    identical to extraction over the cropped sub-image.
    """
    config = config or FeatureConfig()
    if window is not None:
        x0, y0, x1, y1 = window
        if x1 < x0 or y1 < y0:
            raise FeatureError(f"zero-area window {window}")
        if x0 < 0 or y0 < 0 or x1 >= image.width or y1 >= image.height:
            raise FeatureError(f"window {window} outside {image.width}x{image.height} image")
        image = image.crop(window)
    if image.pixels.size == 0:
        raise FeatureError("zero-area image")

    px = image.pixels
    y = luma(px)
    blocks = [_hist(px[..., c], config.color_bins, 256.0, config.normalized) for c in range(3)]
    blocks.append(_hist(y, config.brightness_bins, 256.0, config.normalized))
    blocks.append(_hist(contrast_map(y), config.contrast_bins, CONTRAST_MAX, config.normalized))
    blocks.append(_hist(fft_log_magnitude(y), config.fft_bins, FFT_LOG_MAX, config.normalized))
    return FeatureVector(np.concatenate(blocks), config.layout())


def load_external_features(path, expected_layout) -> FeatureVector:
    """Read a sidecar feature file (one float per line)."""
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        tok = line.strip()
        if not tok:
            continue
        try:
            v = float(tok)
        except ValueError:
            raise FeatureError(f"line {lineno}: not a number: {tok!r}") from None
        if not math.isfinite(v):
            raise FeatureError(f"line {lineno}: non-finite value {tok!r}")
        values.append(v)
    expected = sum(int(b) for _, b in expected_layout)
    if len(values) != expected:
        raise FeatureError(f"length mismatch: expected {expected} values, got {len(values)}")
    return FeatureVector(np.array(values), expected_layout)


def save_external_features(vector: FeatureVector, path) -> None:
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in vector.values))


def train_class_attribute_model(regions) -> dict[int, AttributeVector]:
    """Mean attribute vector per class from (class_id, AttributeVector) pairs."""
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for label, attrs in regions:
        vec = np.asarray(attrs, dtype=np.float64)
        if vec.shape != (N_ATTRIBUTES,):
            raise ValueError(f"expected {N_ATTRIBUTES} attributes, got shape {vec.shape}")
        label = int(label)
        if label in sums:
            sums[label] += vec
            counts[label] += 1
        else:
            sums[label] = vec.copy()
            counts[label] = 1
    if not sums:
        raise ValueError("no training regions")
    return {
        label: AttributeVector(*(sums[label] / counts[label]).tolist())
        for label in sorted(sums)
    }


_ATTR_MAGIC = "ATTR 1"


def save_attribute_table(table: dict[int, AttributeVector], path) -> None:
    lines = [_ATTR_MAGIC]
    for label in sorted(table):
        lines.append(" ".join([str(label)] + [repr(float(v)) for v in table[label]]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_attribute_table(path) -> dict[int, AttributeVector]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != _ATTR_MAGIC:
        raise ValueError(f"{path}: malformed header, expected {_ATTR_MAGIC!r}")
    table = {}
    for lineno, line in enumerate(lines[1:], start=2):
        toks = line.split()
        if not toks:
            continue
        if len(toks) != N_ATTRIBUTES + 1:
            raise ValueError(f"{path}: line {lineno}: expected {N_ATTRIBUTES + 1} fields")
        table[int(toks[0])] = AttributeVector(*(float(t) for t in toks[1:]))
    return table
