"""Small random-scene builders shared by the tests."""

from __future__ import annotations

import numpy as np

from asmseg.labelmap import LabelMap


def random_scene(rng: np.random.Generator, h: int = 32, w: int = 32, n_objects: int = 4,
                 n_labels: int = 5, touching: bool = True) -> LabelMap:
    """Paint ``n_objects`` random rectangles (later ones on top)."""
    grid = np.zeros((h, w), dtype=np.uint8)
    for _ in range(n_objects):
        rh, rw = rng.integers(2, h // 2), rng.integers(2, w // 2)
        top, left = rng.integers(0, h - rh), rng.integers(0, w - rw)
        grid[top : top + rh, left : left + rw] = rng.integers(1, n_labels + 1)
    if not touching:
        grid[::8, :] = 0
    return LabelMap(grid)


def random_scenes(seed: int, count: int, **kwargs) -> list[LabelMap]:
    rng = np.random.default_rng(seed)
    return [random_scene(rng, **kwargs) for _ in range(count)]
