"""Synthetic thin tubular structures: lines, arcs and branching trees in 2D or 3D."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .skeleton import diamond


@dataclass
class Segment:
    path: np.ndarray  # (n, ndim) ordered, 8/26-connected cell coordinates
    label: int


def rasterize(a, b, shape) -> np.ndarray:
    """Cells along the straight segment a-b, ordered, no repeats, clipped to the grid."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = int(np.ceil(np.max(np.abs(b - a)) * 2)) + 1
    t = np.linspace(0.0, 1.0, n)[:, None]
    pts = np.rint(a + t * (b - a)).astype(np.int64)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    pts = pts[keep]
    inside = np.all((pts >= 0) & (pts < np.asarray(shape)), axis=1)
    return pts[inside]


def _polyline(points, shape) -> np.ndarray:
    parts = [rasterize(p, q, shape) for p, q in zip(points, points[1:])]
    path = np.concatenate(parts) if parts else np.empty((0, len(shape)), dtype=np.int64)
    if len(path) > 1:
        keep = np.ones(len(path), dtype=bool)
        keep[1:] = np.any(path[1:] != path[:-1], axis=1)
        path = path[keep]
    return path


def _random_direction(rng, ndim):
    v = rng.normal(size=ndim)
    return v / np.linalg.norm(v)


def line(rng, shape, label=1, margin=3) -> list[Segment]:
    shape = np.asarray(shape)
    lo, hi = margin, shape - 1 - margin
    for _ in range(100):
        a = rng.uniform(lo, hi)
        b = rng.uniform(lo, hi)
        if np.linalg.norm(b - a) >= 0.5 * shape.min():
            break
    return [Segment(_polyline([a, b], shape), label)]


def arc(rng, shape, label=1, margin=3) -> list[Segment]:
    shape = np.asarray(shape)
    ndim = len(shape)
    center = shape / 2.0 + rng.uniform(-0.1, 0.1, ndim) * shape
    radius = rng.uniform(0.25, 0.4) * shape.min()
    start = rng.uniform(0, 2 * np.pi)
    span = rng.uniform(0.5 * np.pi, 1.5 * np.pi)
    if ndim == 2:
        u, v = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    else:
        u = _random_direction(rng, ndim)
        v = _random_direction(rng, ndim)
        v = v - u * (u @ v)
        v /= np.linalg.norm(v)
    angles = np.linspace(start, start + span, 24)
    pts = [center + radius * (np.cos(t) * u + np.sin(t) * v) for t in angles]
    pts = [np.clip(p, margin, shape - 1 - margin) for p in pts]
    return [Segment(_polyline(pts, shape), label)]


def tree(rng, shape, num_classes=1, depth=3, margin=3) -> list[Segment]:
    """Binary branching tree grown from a random root; branch i gets class (i mod K) + 1."""
    shape = np.asarray(shape)
    ndim = len(shape)
    lo, hi = float(margin), shape - 1.0 - margin
    root = rng.uniform(lo, hi)
    heading = (shape / 2.0 - root) + rng.normal(size=ndim)
    heading /= np.linalg.norm(heading)
    segs: list[Segment] = []
    stack = [(root, heading, 0)]
    base = 0.3 * shape.min()
    while stack:
        start, d, level = stack.pop(0)
        length = base * rng.uniform(0.7, 1.1) * 0.75**level
        end = np.clip(start + d * length, lo, hi)
        path = _polyline([start, end], shape)
        if len(path) < 4:
            continue
        segs.append(Segment(path, (len(segs) % num_classes) + 1))
        if level + 1 < depth:
            for sign in (-1.0, 1.0):
                turn = _random_direction(rng, ndim)
                turn -= d * (turn @ d)
                if ndim == 2:
                    turn = np.array([-d[1], d[0]]) * sign
                else:
                    turn *= sign
                nd = d + turn * rng.uniform(0.5, 1.2)
                stack.append((end, nd / np.linalg.norm(nd), level + 1))
    return segs


def paint(shape, segments, thickness: int = 0) -> np.ndarray:
    """Label raster of the segments; thickness is the L1 radius of each tube (width 2t+1)."""
    out = np.zeros(tuple(shape), dtype=np.int32)
    if thickness:
        foot = np.argwhere(diamond(thickness, len(shape))) - thickness
    for seg in segments:
        cells = seg.path
        if thickness:
            cells = (cells[:, None, :] + foot[None]).reshape(-1, len(shape))
            ok = np.all((cells >= 0) & (cells < np.asarray(shape)), axis=1)
            cells = cells[ok]
        idx = tuple(cells.T)
        free = out[idx] == 0
        out[tuple(cells[free].T)] = seg.label
    return out


def cut_gaps(labels, segments, rng, gap: int, count: int, thickness: int = 0) -> tuple[np.ndarray, int]:
    """Remove ``count`` runs of ``gap`` consecutive centerline cells, with their tube cross-section."""
    out = labels.copy()
    if gap <= 0 or count <= 0:
        return out, 0
    shape = np.asarray(labels.shape)
    reach = thickness + 1 if thickness else 0
    made = 0
    usable = [s for s in segments if len(s.path) >= gap + 8]
    for _ in range(count):
        if not usable:
            break
        seg = usable[rng.integers(len(usable))]
        start = rng.integers(4, len(seg.path) - gap - 3)
        for cell in seg.path[start : start + gap]:
            lo = np.maximum(cell - reach, 0)
            hi = np.minimum(cell + reach + 1, shape)
            out[tuple(slice(a, b) for a, b in zip(lo, hi))] = 0
        made += 1
    return out, made


def flip_band(labels, rng, rate: float) -> np.ndarray:
    """Flip labels with probability ``rate`` in the one-cell band around the foreground.

    Foreground cells turn to background; background cells next to a
    structure take the label of their first foreground neighbor.
    """
    if rate <= 0:
        return labels.copy()

    fg = labels > 0
    full = ndimage.generate_binary_structure(labels.ndim, labels.ndim)
    band = ndimage.binary_dilation(fg, structure=full)
    flip = band & (rng.random(labels.shape) < rate)
    out = labels.copy()
    out[flip & fg] = 0
    grow = np.argwhere(flip & ~fg)
    for cell in grow:
        lo = np.maximum(cell - 1, 0)
        hi = np.minimum(cell + 2, labels.shape)
        window = labels[tuple(slice(a, b) for a, b in zip(lo, hi))]
        out[tuple(cell)] = window[window > 0][0]
    return out
