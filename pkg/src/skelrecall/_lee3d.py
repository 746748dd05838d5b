"""Numba kernels for 3D directional thinning by simple-point deletion.

A 3x3x3 neighborhood is flattened as ``(dz + 1) * 9 + (dy + 1) * 3 + (dx + 1)``;
index 13 is the center voxel.
"""

import itertools

import numpy as np
from numba import njit

CENTER = 13


def _flat(off):
    return (off[0] + 1) * 9 + (off[1] + 1) * 3 + (off[2] + 1)


def _incident(sign):
    # Neighbors sharing the center-cube cell given by a sign vector.
    choices = [(0, s) if s != 0 else (0,) for s in sign]
    return [_flat(o) for o in itertools.product(*choices) if any(o)]


def _build_tables():
    faces, edges, verts = [], [], []
    for sign in itertools.product((-1, 0, 1), repeat=3):
        nz = sum(s != 0 for s in sign)
        if nz == 1:
            faces.append(_incident(sign))
        elif nz == 2:
            edges.append(_incident(sign))
        elif nz == 3:
            verts.append(_incident(sign))
    adj = np.full((27, 26), -1, dtype=np.int64)
    adj_n = np.zeros(27, dtype=np.int64)
    coords = list(itertools.product((-1, 0, 1), repeat=3))
    for i, a in enumerate(coords):
        for j, b in enumerate(coords):
            if i != j and max(abs(x - y) for x, y in zip(a, b)) == 1:
                adj[i, adj_n[i]] = j
                adj_n[i] += 1
    return (
        np.array(faces, dtype=np.int64).ravel(),
        np.array(edges, dtype=np.int64),
        np.array(verts, dtype=np.int64),
        adj,
        adj_n,
    )


FACES, EDGES, VERTS, ADJ, ADJ_N = _build_tables()

# Border directions, visited in this order within every pass.
DIRECTIONS = np.array(
    [[0, -1, 0], [0, 1, 0], [0, 0, 1], [0, 0, -1], [1, 0, 0], [-1, 0, 0]], dtype=np.int64
)


@njit(cache=True)
def _gather(img, p, r, c, nb):
    k = 0
    for dp in range(-1, 2):
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                nb[k] = img[p + dp, r + dr, c + dc]
                k += 1


@njit(cache=True)
def _count(nb):
    n = 0
    for k in range(27):
        if k != CENTER and nb[k]:
            n += 1
    return n


@njit(cache=True)
def euler_invariant(nb, faces, edges, verts):
    # Removing the center keeps chi iff its cube meets the rest in a chi == 1 set.
    chi = 0
    for v in range(verts.shape[0]):
        for j in range(verts.shape[1]):
            if nb[verts[v, j]]:
                chi += 1
                break
    for e in range(edges.shape[0]):
        for j in range(edges.shape[1]):
            if nb[edges[e, j]]:
                chi -= 1
                break
    for f in range(faces.shape[0]):
        if nb[faces[f]]:
            chi += 1
    return chi == 1


@njit(cache=True)
def single_component(nb, adj, adj_n):
    """True iff the foreground of N26 minus the center is one 26-component."""
    seen = np.zeros(27, dtype=np.bool_)
    stack = np.empty(27, dtype=np.int64)
    total = 0
    start = -1
    for k in range(27):
        if k != CENTER and nb[k]:
            total += 1
            if start < 0:
                start = k
    if total == 0:
        return False
    top = 0
    stack[top] = start
    top += 1
    seen[start] = True
    reached = 1
    while top > 0:
        top -= 1
        cur = stack[top]
        for j in range(adj_n[cur]):
            nxt = adj[cur, j]
            if nxt != CENTER and nb[nxt] and not seen[nxt]:
                seen[nxt] = True
                reached += 1
                stack[top] = nxt
                top += 1
    return reached == total


@njit(cache=True)
def thin_padded(img, directions, faces, edges, verts, adj, adj_n):
    """Thin a zero-padded uint8 volume in place until no direction deletes anything."""
    nfg = 0
    for p in range(img.shape[0]):
        for r in range(img.shape[1]):
            for c in range(img.shape[2]):
                if img[p, r, c]:
                    nfg += 1
    cand = np.empty((max(nfg, 1), 3), dtype=np.int64)
    nb = np.zeros(27, dtype=np.uint8)
    unchanged = 0
    while unchanged < directions.shape[0]:
        unchanged = 0
        for d in range(directions.shape[0]):
            dp, dr, dc = directions[d, 0], directions[d, 1], directions[d, 2]
            n = 0
            for p in range(1, img.shape[0] - 1):
                for r in range(1, img.shape[1] - 1):
                    for c in range(1, img.shape[2] - 1):
                        if img[p, r, c] == 0 or img[p + dp, r + dr, c + dc] != 0:
                            continue
                        _gather(img, p, r, c, nb)
                        if _count(nb) == 1:
                            continue  # endpoint
                        if not euler_invariant(nb, faces, edges, verts):
                            continue
                        if not single_component(nb, adj, adj_n):
                            continue
                        cand[n, 0] = p
                        cand[n, 1] = r
                        cand[n, 2] = c
                        n += 1
            changed = False
            for i in range(n):
                p, r, c = cand[i, 0], cand[i, 1], cand[i, 2]
                _gather(img, p, r, c, nb)
                # Sequential deletion: re-test against the current state.
                if euler_invariant(nb, faces, edges, verts) and single_component(nb, adj, adj_n):
                    img[p, r, c] = 0
                    changed = True
            if not changed:
                unchanged += 1
    return img


def is_simple_3d(nb27: np.ndarray) -> bool:
    """Deletability test used by the thinning loop, for a flat 27-vector."""
    nb = np.ascontiguousarray(nb27, dtype=np.uint8)
    return bool(euler_invariant(nb, FACES, EDGES, VERTS) and single_component(nb, ADJ, ADJ_N))
