"""Exact thinning, L1 dilation, tubed skeletons and the min/max-filter soft skeleton."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import ndimage

from . import _lee3d
from .grid import LabelGrid, binarize

MAX_SOFT_ITERS = 100


# --- exact thinning ---------------------------------------------------------


def thin_2d(b: np.ndarray) -> np.ndarray:
    """Zhang-Suen two-subiteration thinning.

    Each subiteration marks deletable pixels against the state at its start and
    removes them together. Stops after the first full pass that deletes nothing.
    Pixels outside the grid count as background.
    """
    b = np.asarray(b, dtype=bool)
    if b.ndim != 2:
        raise ValueError(f"thin_2d needs a 2D grid, got {b.ndim}D")
    img = np.pad(b, 1).astype(np.uint8)
    h, w = b.shape

    def shifted(dr, dc):
        return img[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]

    while True:
        deleted = 0
        for step in (0, 1):
            # P2..P9 clockwise from north.
            p2, p3, p4, p5 = shifted(-1, 0), shifted(-1, 1), shifted(0, 1), shifted(1, 1)
            p6, p7, p8, p9 = shifted(1, 0), shifted(1, -1), shifted(0, -1), shifted(-1, -1)
            ring = (p2, p3, p4, p5, p6, p7, p8, p9, p2)
            count = sum(x.astype(np.int8) for x in ring[:8])
            transitions = sum(((a == 0) & (b_ == 1)).astype(np.int8) for a, b_ in zip(ring, ring[1:]))
            if step == 0:
                c3 = (p2 & p4 & p6) == 0
                c4 = (p4 & p6 & p8) == 0
            else:
                c3 = (p2 & p4 & p8) == 0
                c4 = (p2 & p6 & p8) == 0
            core = shifted(0, 0)
            delete = (core == 1) & (count >= 2) & (count <= 6) & (transitions == 1) & c3 & c4
            n = int(delete.sum())
            if n:
                core[delete] = 0
                deleted += n
        if not deleted:
            break
    return img[1:-1, 1:-1].astype(bool)


def thin_3d(b: np.ndarray) -> np.ndarray:
    """Directional simple-point thinning of a volume to a curve skeleton.

    Six border directions per pass. In each, border voxels that are not
    endpoints, keep the Euler characteristic and leave their 26-neighborhood
    in one piece are collected, then deleted one by one with a re-check
    against the current state.
    """
    b = np.asarray(b, dtype=bool)
    if b.ndim != 3:
        raise ValueError(f"thin_3d needs a 3D grid, got {b.ndim}D")
    img = np.pad(b, 1).astype(np.uint8)
    _lee3d.thin_padded(
        img, _lee3d.DIRECTIONS, _lee3d.FACES, _lee3d.EDGES, _lee3d.VERTS, _lee3d.ADJ, _lee3d.ADJ_N
    )
    return img[1:-1, 1:-1, 1:-1].astype(bool)


def thin(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=bool)
    return thin_2d(b) if b.ndim == 2 else thin_3d(b)


# --- dilation and tubed skeleton --------------------------------------------


def diamond(radius: int, ndim: int) -> np.ndarray:
    """L1 ball {offsets : sum |d| <= radius} as a boolean footprint."""
    r = int(radius)
    grids = np.indices((2 * r + 1,) * ndim) - r
    return np.abs(grids).sum(axis=0) <= r


def dilate_l1(b: np.ndarray, radius: int) -> np.ndarray:
    """Dilate by the L1 ball of the given radius; outside the grid is background."""
    b = np.asarray(b, dtype=bool)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if radius == 0 or not b.any():
        return b.copy()
    cross = ndimage.generate_binary_structure(b.ndim, 1)
    # iterations=0 would mean "until stable" in scipy; radius >= 1 here.
    return ndimage.binary_dilation(b, structure=cross, iterations=int(radius))


@dataclass(frozen=True, eq=False)
class TubedSkeleton(LabelGrid):
    radius: int = 2
    clip: bool = True


def _nearest_label(y: np.ndarray, cells: np.ndarray, radius: int) -> np.ndarray:
    """Label of the nearest nonzero cell of y for each cell in ``cells``.

    Nearest is by Euclidean distance; ties go to the lowest linear index,
    i.e. the lexicographically smallest offset.
    """
    ndim = y.ndim
    reach = radius
    offsets = [o for o in itertools.product(range(-reach, reach + 1), repeat=ndim)]
    offsets.sort(key=lambda o: (sum(v * v for v in o), o))
    out = np.zeros(cells.shape[0], dtype=y.dtype)
    todo = np.ones(cells.shape[0], dtype=bool)
    dims = np.array(y.shape)
    for off in offsets:
        if not todo.any():
            break
        tgt = cells + np.array(off)
        ok = todo & np.all((tgt >= 0) & (tgt < dims), axis=1)
        idx = np.nonzero(ok)[0]
        vals = y[tuple(tgt[idx].T)]
        hit = vals > 0
        out[idx[hit]] = vals[hit]
        todo[idx[hit]] = False
    if todo.any():
        raise RuntimeError("tube cell without a labeled cell within the dilation radius")
    return out


def tubed_skeleton(y: LabelGrid, radius: int = 2, clip: bool = True) -> TubedSkeleton:
    """Binarize, thin, dilate with the L1 ball, then restore class labels.

    With ``clip`` the tube is multiplied by the label grid, so it never leaves
    the foreground. Without it, tube cells outside the foreground take the
    label of the nearest foreground cell.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    fg = binarize(y)
    tube = dilate_l1(thin(fg), radius)
    if clip:
        out = np.where(tube, y.data, 0)
    else:
        out = np.where(tube, y.data, 0)
        outside = tube & ~fg
        if outside.any():
            cells = np.argwhere(outside)
            out[outside] = _nearest_label(y.data, cells, radius)
    return TubedSkeleton(out, y.num_classes, radius=int(radius), clip=bool(clip))


# --- soft morphology with subgradient backward passes -----------------------


def _slab(ndim: int, axis: int, start, stop):
    sl = [slice(None)] * ndim
    sl[axis] = slice(start, stop)
    return tuple(sl)


def _pool1d(x: np.ndarray, axis: int, op) -> np.ndarray:
    """Width-3 min/max along one axis, zero outside the grid."""
    nd = x.ndim
    out = x.copy()
    if x.shape[axis] > 1:
        head, tail = _slab(nd, axis, 1, None), _slab(nd, axis, None, -1)
        op(out[head], x[tail], out=out[head])
        op(out[tail], x[head], out=out[tail])
    for edge in (0, -1):
        sl = _slab(nd, axis, edge, None if edge == -1 else 1)
        op(out[sl], 0.0, out=out[sl])
    return out


def _pool1d_backward(x: np.ndarray, out: np.ndarray, g: np.ndarray, axis: int) -> np.ndarray:
    """Route each output gradient to the window element that produced it.

    Ties resolve center first, then left, then right. Gradient landing
    outside the grid is dropped.
    """
    nd = x.ndim
    head, tail = _slab(nd, axis, 1, None), _slab(nd, axis, None, -1)
    first = _slab(nd, axis, 0, 1)
    hit = x == out
    grad = g * hit
    free = ~hit
    # Left neighbor of output i is input i - 1.
    hit = free[head] & (x[tail] == out[head])
    grad[tail] += g[head] * hit
    free[head] &= ~hit
    free[first] &= out[first] != 0.0
    # Right neighbor of output i is input i + 1.
    hit = free[tail] & (x[head] == out[tail])
    grad[head] += g[tail] * hit
    return grad


def _box(x: np.ndarray, op) -> np.ndarray:
    for axis in range(x.ndim):
        x = _pool1d(x, axis, op)
    return x


def _box_backward(x: np.ndarray, g: np.ndarray, op) -> np.ndarray:
    stages = [x]
    for axis in range(x.ndim - 1):
        stages.append(_pool1d(stages[-1], axis, op))
    out = _pool1d(stages[-1], x.ndim - 1, op)
    for axis in reversed(range(x.ndim)):
        inp = stages[axis]
        g = _pool1d_backward(inp, out, g, axis)
        out = inp
    return g


def soft_erode(x: np.ndarray) -> np.ndarray:
    """3^d min filter, zero outside the grid."""
    return _box(x, np.minimum)


def soft_dilate(x: np.ndarray) -> np.ndarray:
    """3^d max filter, zero outside the grid."""
    return _box(x, np.maximum)


def soft_open(x: np.ndarray) -> np.ndarray:
    return soft_dilate(soft_erode(x))


def soft_erode_backward(x, g):
    return _box_backward(x, g, np.minimum)


def soft_dilate_backward(x, g):
    return _box_backward(x, g, np.maximum)


def _relu(x):
    return np.maximum(x, 0.0)


def _check_iters(iterations: int) -> int:
    k = int(iterations)
    if k < 0 or k > MAX_SOFT_ITERS:
        raise ValueError(f"soft skeleton iterations must be in [0, {MAX_SOFT_ITERS}], got {iterations}")
    return k


def soft_skeleton(p: np.ndarray, iterations: int) -> np.ndarray:
    """Soft skeleton of a single-channel map with values in [0, 1]."""
    skel, _ = soft_skeleton_vjp(p, iterations, keep_tape=False)
    return skel


def soft_skeleton_vjp(
    p: np.ndarray, iterations: int, keep_tape: bool = True
) -> tuple[np.ndarray, Callable[[np.ndarray], np.ndarray] | None]:
    """Soft skeleton plus a function mapping d(loss)/d(skeleton) to d(loss)/d(p).

    The backward pass is a subgradient: min/max pick the window element that
    attained the extremum, relu passes gradient only for strictly positive input.
    """
    k = _check_iters(iterations)
    img = np.asarray(p, dtype=np.float64)
    if img.ndim not in (2, 3):
        raise ValueError("soft_skeleton works on a single 2D or 3D channel")
    imgs = [img]
    skels = []
    eroded = soft_erode(img)
    skel = _relu(img - soft_dilate(eroded))
    skels.append(skel)
    for _ in range(k):
        img = eroded
        eroded = soft_erode(img)
        delta = _relu(img - soft_dilate(eroded))
        skel = skel + _relu(delta - skel * delta)
        if keep_tape:
            imgs.append(img)
            skels.append(skel)
    if not keep_tape:
        return skel, None

    def backward(g_skel: np.ndarray) -> np.ndarray:
        g_s = np.asarray(g_skel, dtype=np.float64)
        g_img_next = None  # gradient w.r.t. imgs[j + 1] flowing back through erosion
        g_total = None
        for j in range(k, -1, -1):
            x = imgs[j]
            e = imgs[j + 1] if j + 1 < len(imgs) else soft_erode(x)
            opened = soft_dilate(e)
            diff = x - opened
            d = _relu(diff)
            if j > 0:
                s_prev = skels[j - 1]
                act = (d - s_prev * d) > 0
                g_d = np.where(act, g_s * (1.0 - s_prev), 0.0)
                g_s = g_s - np.where(act, g_s * d, 0.0)
            else:
                g_d = g_s
            g_diff = np.where(diff > 0, g_d, 0.0)
            # d(opened)/dx chains through dilate then erode.
            g_e = -soft_dilate_backward(e, g_diff)
            if g_img_next is not None:
                g_e = g_e + g_img_next
            g_x = g_diff + soft_erode_backward(x, g_e)
            g_img_next = g_x
            g_total = g_x
        return g_total

    return skel, backward
