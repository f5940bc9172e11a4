"""Slow, independent reference implementations used only by the tests.

Each oracle recomputes a quantity from first principles with plain Python
loops so it shares no code path with the package.
"""

from __future__ import annotations

import cmath
import math
from collections import deque


def flood_fill_components(grid, connectivity=4):
    """Connected components of equal non-zero, non-255 labels via BFS.

    Returns a sorted list of (label, frozenset of (row, col)).
    """
    h, w = len(grid), len(grid[0])
    steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    if connectivity == 8:
        steps += [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    seen = set()
    comps = []
    for r in range(h):
        for c in range(w):
            lab = grid[r][c]
            if lab in (0, 255) or (r, c) in seen:
                continue
            pix = set()
            queue = deque([(r, c)])
            seen.add((r, c))
            while queue:
                y, x = queue.popleft()
                pix.add((y, x))
                for dy, dx in steps:
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and (ny, nx) not in seen and grid[ny][nx] == lab:
                        seen.add((ny, nx))
                        queue.append((ny, nx))
            comps.append((int(lab), frozenset(pix)))
    return sorted(comps, key=lambda t: (t[0], sorted(t[1])))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_area(points):
    """Andrew's monotone chain, then the shoelace formula."""
    pts = sorted(set(points))
    if len(pts) < 3:
        return 0.0
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    s = 0
    for i in range(len(hull)):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % len(hull)]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2.0


def region_attributes(pixels, width, height):
    """All ten shape attributes of a pixel set {(row, col)} by direct enumeration."""
    pix = sorted(pixels)
    n = len(pix)
    xs = [c for _, c in pix]
    ys = [r for r, _ in pix]
    cx = math.fsum(xs) / n
    cy = math.fsum(ys) / n
    mu20 = math.fsum((x - cx) ** 2 for x in xs) / n
    mu02 = math.fsum((y - cy) ** 2 for y in ys) / n
    mu11 = math.fsum((x - cx) * (y - cy) for x, y in zip(xs, ys)) / n
    # Eigenvalues of the covariance matrix via the characteristic polynomial.
    tr = mu20 + mu02
    det = mu20 * mu02 - mu11 * mu11
    disc = math.sqrt(max(tr * tr / 4.0 - det, 0.0))
    major, minor = tr / 2.0 + disc, tr / 2.0 - disc
    if disc <= 1e-12 * max(tr, 1e-300):
        ecc, orient = 0.0, 0.0
    else:
        ecc = 1.0 if minor <= 1e-12 * major else math.sqrt(1.0 - minor / major)
        orient = -0.5 * math.atan2(2.0 * mu11, mu20 - mu02)
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    bw, bh = x1 - x0 + 1, y1 - y0 + 1
    pset = set(pix)
    perimeter = 0
    for r, c in pix:
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if (r + dr, c + dc) not in pset:
                perimeter += 1
    corners = [(c + dx, r + dy) for r, c in pix for dx in (0, 1) for dy in (0, 1)]
    hull = convex_hull_area(corners)
    return {
        "area_ratio": n / (width * height),
        "extent": n / (bw * bh),
        "aspect_ratio": bw / bh,
        "eccentricity": ecc,
        "orientation": orient,
        "solidity": min(1.0, n / hull),
        "compactness": 4.0 * math.pi * n / perimeter**2,
        "centroid_x": (cx + 0.5) / width,
        "centroid_y": (cy + 0.5) / height,
        "perimeter_ratio": perimeter / math.hypot(width, height),
    }


def naive_dft_magnitude(img):
    """|F(u, v)| by the O(n^4) double sum, for small images only."""
    h, w = len(img), len(img[0])
    out = [[0.0] * w for _ in range(h)]
    for u in range(h):
        for v in range(w):
            s = 0j
            for y in range(h):
                for x in range(w):
                    s += img[y][x] * cmath.exp(-2j * math.pi * (u * y / h + v * x / w))
            out[u][v] = abs(s)
    return out


def pixel_iou_counts(pairs, ignore=255):
    """Per-class (intersection, union) by visiting every pixel once."""
    inter, union = {}, {}
    for pred, gt in pairs:
        for prow, grow in zip(pred, gt):
            for p, g in zip(prow, grow):
                if p == ignore or g == ignore:
                    continue
                if p == g:
                    inter[p] = inter.get(p, 0) + 1
                    union[p] = union.get(p, 0) + 1
                else:
                    union[p] = union.get(p, 0) + 1
                    union[g] = union.get(g, 0) + 1
    return inter, union


def best_relabeling(edge_score, incident, labels, current):
    """Exhaustive search: label maximizing the sum of incident edge scores.

    ``edge_score(edge, label)`` scores one incident edge with the node relabeled.
    Ties go to the smallest label.
    """
    best_label, best_total = None, -math.inf
    for lab in sorted(labels):
        if lab == current:
            continue
        total = 0.0
        for e in incident:
            total += edge_score(e, lab)
        if total > best_total:
            best_label, best_total = lab, total
    return best_label, best_total


def oracle_edge_score(obs, pairs, label_i, label_j):
    """Averaged relation score of one observed edge under hypothetical labels.

    ``pairs`` maps (label_i, label_j) to training means with fields left,
    right, up, down, size, proximity, count.
    """
    stats = pairs.get((label_i, label_j))
    h, v = obs.horizontal, obs.vertical
    w0, w2 = int(h <= 1.0), int(v <= 1.0)
    if stats is None or stats.count == 0:
        sims = [0.5] * 6
    else:
        def s(x, y):
            return min(x, y) / max(x, y)
        sims = [s(h, stats.left), s(h, stats.right), s(v, stats.up), s(v, stats.down), s(obs.size, stats.size),
                1.0 - abs(obs.adjacency - stats.proximity)]
    return (w0 * sims[0] + (1 - w0) * sims[1] + w2 * sims[2] + (1 - w2) * sims[3] + sims[4] + sims[5]) / 6.0


def node_relabeling_oracle(graph, node, model):
    """Exhaustive best relabeling of ``node`` over the model's full label set."""
    incident = [k for k in graph.observations if node in k]

    def score(key, lab):
        a, b = key
        li = lab if a == node else graph.nodes[a].label
        lj = lab if b == node else graph.nodes[b].label
        return oracle_edge_score(graph.observations[key], model.pairs, li, lj)

    return best_relabeling(score, incident, model.labels, graph.nodes[node].label)
