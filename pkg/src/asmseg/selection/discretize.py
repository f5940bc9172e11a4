"""Equal-width discretization of continuous feature values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class DiscretizationTable:
    mins: np.ndarray
    maxs: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=np.float64)
        maxs = np.asarray(self.maxs, dtype=np.float64)
        k = np.broadcast_to(np.asarray(self.k, dtype=np.int64), mins.shape).copy()
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise ValueError("mins and maxs must be 1-D and equally long")
        if np.any(maxs < mins) or np.any(k < 1):
            raise ValueError("need max >= min and k >= 1 for every dimension")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(self, "k", k)

    def __len__(self):
        return self.mins.size


def fit_discretization(vectors, k: int) -> DiscretizationTable:
    data = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if data.shape[0] == 0:
        raise ValueError("need at least one training vector")
    return DiscretizationTable(data.min(axis=0), data.max(axis=0), np.full(data.shape[1], k))


def bin_edges(table: DiscretizationTable, dim: int) -> np.ndarray:
    """k + 1 edges; bin i covers [edge[i-1], edge[i]), the last bin is closed."""
    lo, hi, k = table.mins[dim], table.maxs[dim], int(table.k[dim])
    edges = lo + (hi - lo) * np.arange(k + 1) / k
    edges[-1] = hi
    return edges


def discretize(value: float, dim: int, table: DiscretizationTable) -> int:
    """1-based bin of ``value``; values outside [min, max] clamp to the end bins."""
    if table.maxs[dim] == table.mins[dim]:
        return 1
    k = int(table.k[dim])
    b = int(np.searchsorted(bin_edges(table, dim), value, side="right"))
    return min(max(b, 1), k)


def discretize_vector(values, table: DiscretizationTable) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return np.array([discretize(v, d, table) for d, v in enumerate(values)], dtype=np.int64)


def discretize_matrix(data, table: DiscretizationTable) -> np.ndarray:
    """Vectorised :func:`discretize` over an (n, dims) array."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    out = np.ones(data.shape, dtype=np.int64)
    for d in range(data.shape[1]):
        if table.maxs[d] == table.mins[d]:
            continue
        b = np.searchsorted(bin_edges(table, d), data[:, d], side="right")
        out[:, d] = np.clip(b, 1, int(table.k[d]))
    return out
