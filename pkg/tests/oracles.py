"""Slow, literal reference implementations used only by the tests.

None of these share code with the package; they follow textbook definitions.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np


def offsets(ndim: int, max_nonzero: int):
    out = []
    for off in itertools.product((-1, 0, 1), repeat=ndim):
        nz = sum(1 for v in off if v)
        if 0 < nz <= max_nonzero:
            out.append(off)
    return out


def bfs_components(b: np.ndarray, max_nonzero: int) -> int:
    b = np.asarray(b, dtype=bool)
    seen = np.zeros_like(b)
    offs = offsets(b.ndim, max_nonzero)
    count = 0
    for start in zip(*np.nonzero(b)):
        if seen[start]:
            continue
        count += 1
        seen[start] = True
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for off in offs:
                nb = tuple(c + o for c, o in zip(cur, off))
                if all(0 <= v < n for v, n in zip(nb, b.shape)) and b[nb] and not seen[nb]:
                    seen[nb] = True
                    queue.append(nb)
    return count


def enclosed_background(b: np.ndarray, max_nonzero: int) -> int:
    """Background components not reaching the grid border, by BFS on a padded complement."""
    padded = np.pad(~np.asarray(b, dtype=bool), 1, constant_values=True)
    return bfs_components(padded, max_nonzero) - 1


def closed_cell_euler(b: np.ndarray) -> int:
    """Euler characteristic of the union of closed unit squares/cubes, by explicit face sets.

    Faces are identified by doubled coordinates: a cell at index i spans
    doubled coordinates 2i .. 2i + 2, and a face's dimension is the number of
    odd coordinates.
    """
    faces = set()
    nd = b.ndim
    for cell in zip(*np.nonzero(b)):
        for choice in itertools.product((0, 1, 2), repeat=nd):
            faces.add(tuple(2 * c + k for c, k in zip(cell, choice)))
    return sum((-1) ** sum(v % 2 for v in f) for f in faces)


def graph_euler(b: np.ndarray) -> int:
    """Euler characteristic with cells as vertices, face adjacency as edges, full 2^k blocks as higher cells."""
    b = np.asarray(b, dtype=bool)
    nd = b.ndim
    chi = 0
    for k in range(nd + 1):
        for axes in itertools.combinations(range(nd), k):
            count = 0
            for cell in zip(*np.nonzero(b)):
                ok = True
                for steps in itertools.product((0, 1), repeat=k):
                    nb = list(cell)
                    for a, s in zip(axes, steps):
                        nb[a] += s
                    if not all(0 <= v < n for v, n in zip(nb, b.shape)) or not b[tuple(nb)]:
                        ok = False
                        break
                count += ok
            chi += (-1) ** k * count
    return chi


def zhang_suen(b: np.ndarray) -> np.ndarray:
    """Pixel-by-pixel Zhang-Suen thinning with simultaneous deletion per subiteration."""
    img = np.pad(np.asarray(b, dtype=np.uint8), 1)
    h, w = img.shape
    changed = True
    while changed:
        changed = False
        for step in (0, 1):
            marked = []
            for r in range(1, h - 1):
                for c in range(1, w - 1):
                    if not img[r, c]:
                        continue
                    p = [img[r - 1, c], img[r - 1, c + 1], img[r, c + 1], img[r + 1, c + 1],
                         img[r + 1, c], img[r + 1, c - 1], img[r, c - 1], img[r - 1, c - 1]]
                    n = sum(p)
                    a = sum(1 for i in range(8) if p[i] == 0 and p[(i + 1) % 8] == 1)
                    p2, p4, p6, p8 = p[0], p[2], p[4], p[6]
                    if step == 0:
                        ok = p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
                    else:
                        ok = p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
                    if 2 <= n <= 6 and a == 1 and ok:
                        marked.append((r, c))
            for rc in marked:
                img[rc] = 0
            changed |= bool(marked)
    return img[1:-1, 1:-1].astype(bool)


def simple_point_3d(cube: np.ndarray) -> bool:
    """Bertrand-Malandain characterization for (26, 6) topology on a 3x3x3 patch.

    Simple iff the foreground in N26* has one 26-component and the background
    in N18* has exactly one 6-component that is 6-adjacent to the center.
    """
    cube = np.asarray(cube, dtype=bool).reshape(3, 3, 3)
    fg = cube.copy()
    fg[1, 1, 1] = False
    if bfs_components(fg, 3) != 1:
        return False
    bg = ~cube
    bg[1, 1, 1] = False
    for corner in itertools.product((0, 2), repeat=3):
        bg[corner] = False
    # 6-components of N18* background that touch a face neighbor of the center.
    seen = np.zeros_like(bg)
    count = 0
    for start in [(0, 1, 1), (2, 1, 1), (1, 0, 1), (1, 2, 1), (1, 1, 0), (1, 1, 2)]:
        if not bg[start] or seen[start]:
            continue
        count += 1
        seen[start] = True
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for off in offsets(3, 1):
                nb = tuple(c + o for c, o in zip(cur, off))
                if all(0 <= v < 3 for v in nb) and bg[nb] and not seen[nb]:
                    seen[nb] = True
                    queue.append(nb)
    return count == 1


def l1_dilate(b: np.ndarray, radius: int) -> np.ndarray:
    b = np.asarray(b, dtype=bool)
    out = np.zeros_like(b)
    offs = [o for o in itertools.product(range(-radius, radius + 1), repeat=b.ndim) if sum(map(abs, o)) <= radius]
    for cell in zip(*np.nonzero(b)):
        for o in offs:
            nb = tuple(c + d for c, d in zip(cell, o))
            if all(0 <= v < n for v, n in zip(nb, b.shape)):
                out[nb] = True
    return out


def blob_2d(rng, shape, count=4, holes=True) -> np.ndarray:
    """Union of axis-aligned rectangles (sides >= 3), optionally with punched rectangular holes."""
    h, w = shape
    out = np.zeros(shape, dtype=bool)
    for _ in range(count):
        rh, rw = rng.integers(3, max(4, h // 2)), rng.integers(3, max(4, w // 2))
        r, c = rng.integers(0, h - rh + 1), rng.integers(0, w - rw + 1)
        out[r : r + rh, c : c + rw] = True
    if holes:
        for _ in range(rng.integers(0, 4)):
            rh, rw = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            # Top-left corners where the hole plus a 3-pixel rim lies inside the foreground.
            fits = np.zeros_like(out)
            for r in range(h - rh - 5):
                for c in range(w - rw - 5):
                    fits[r, c] = out[r : r + rh + 6, c : c + rw + 6].all()
            cand = np.argwhere(fits)
            if len(cand):
                r, c = cand[rng.integers(len(cand))] + 3
                out[r : r + rh, c : c + rw] = False
    return out


def blob_3d(rng, shape, count=3) -> np.ndarray:
    out = np.zeros(shape, dtype=bool)
    for _ in range(count):
        size = [int(rng.integers(3, max(4, n // 2))) for n in shape]
        start = [int(rng.integers(0, n - s + 1)) for n, s in zip(shape, size)]
        out[tuple(slice(a, a + s) for a, s in zip(start, size))] = True
    return out
