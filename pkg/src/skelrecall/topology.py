"""Whole-volume evaluation: components, Euler characteristic, Betti numbers, Dice, clDice."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .grid import Connectivity, LabelGrid, binarize, check_connectivity, class_list
from .skeleton import thin


@dataclass(frozen=True)
class BettiSignature:
    beta0: int
    beta1: int
    beta2: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.beta0, self.beta1, self.beta2)


def connected_components(b: np.ndarray, conn: Connectivity) -> tuple[int, np.ndarray]:
    """Label maximal connected foreground sets 1..count by first linear index."""
    b = np.asarray(b, dtype=bool)
    check_connectivity(conn, b.ndim)
    labels, count = ndimage.label(b, structure=conn.structure())
    if count > 1:
        flat = labels.ravel()
        ids, first = np.unique(flat, return_index=True)
        order = np.argsort(first[ids > 0])
        remap = np.zeros(count + 1, dtype=labels.dtype)
        remap[ids[ids > 0][order]] = np.arange(1, count + 1)
        labels = remap[labels]
    return int(count), labels


def euler_characteristic(b: np.ndarray, conn: Connectivity | None = None) -> int:
    """Euler characteristic of the cubical complex spanned by the foreground.

    With full connectivity (8 / 26, the default) every foreground cell is a
    closed square/cube and shared faces are counted once. With face
    connectivity (4 / 6) a lower-dimensional face belongs to the complex only
    when every cell around it is foreground; such a face spanning k axes plays
    the role of a (d - k)-cell, hence the extra sign.
    """
    b = np.asarray(b, dtype=bool)
    nd = b.ndim
    conn = Connectivity.full(nd) if conn is None else conn
    check_connectivity(conn, nd)
    if conn.max_nonzero == nd:
        combine, sign = np.logical_or, 1
    elif conn.max_nonzero == 1:
        combine, sign = np.logical_and, (-1) ** nd
    else:
        raise ValueError(f"no cubical complex matches connectivity {conn.value}")
    padded = np.pad(b, 1)
    chi = 0
    for extent in itertools.product((False, True), repeat=nd):
        # extent[a]: the face spans axis a, so it sits inside one column of cells there.
        face = padded
        for axis, spans in enumerate(extent):
            n = face.shape[axis]
            lo = [slice(None)] * nd
            hi = [slice(None)] * nd
            if spans:
                lo[axis] = slice(1, n - 1)
                face = face[tuple(lo)]
            else:
                lo[axis] = slice(0, n - 1)
                hi[axis] = slice(1, n)
                face = combine(face[tuple(lo)], face[tuple(hi)])
        chi += (-1) ** sum(extent) * int(face.sum())
    return sign * chi


def _touches_border(labels: np.ndarray) -> set[int]:
    edge = set()
    for axis in range(labels.ndim):
        for idx in (0, -1):
            edge.update(np.unique(np.take(labels, idx, axis=axis)).tolist())
    edge.discard(0)
    return edge


def _enclosed_background(b: np.ndarray, conn_bg: Connectivity) -> int:
    count, labels = connected_components(~b, conn_bg)
    return count - len(_touches_border(labels))


def betti(b: np.ndarray, conn_fg: Connectivity | None = None) -> BettiSignature:
    """Betti numbers of a binary raster.

    2D: beta1 counts background components (dual connectivity) that do not
    touch the border. 3D: beta2 counts those enclosed cavities and beta1
    follows from the Euler characteristic.
    """
    b = np.asarray(b, dtype=bool)
    nd = b.ndim
    conn_fg = Connectivity.full(nd) if conn_fg is None else conn_fg
    check_connectivity(conn_fg, nd)
    beta0, _ = connected_components(b, conn_fg)
    holes = _enclosed_background(b, conn_fg.dual())
    if nd == 2:
        return BettiSignature(beta0, holes, 0)
    chi = euler_characteristic(b, conn_fg)
    return BettiSignature(beta0, beta0 + holes - chi, holes)


def betti_error(pred: np.ndarray, gt: np.ndarray, conn: Connectivity | None = None) -> tuple[int, int]:
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    bp, bg = betti(pred, conn), betti(gt, conn)
    return abs(bp.beta0 - bg.beta0), abs(bp.beta1 - bg.beta1)


def _check_pair(pred: LabelGrid, gt: LabelGrid) -> None:
    if pred.dims != gt.dims:
        raise ValueError(f"dims mismatch: {pred.dims} vs {gt.dims}")
    if pred.num_classes != gt.num_classes:
        raise ValueError(f"class count mismatch: {pred.num_classes} vs {gt.num_classes}")


def _dice_binary(p: np.ndarray, g: np.ndarray) -> tuple[float, bool]:
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return 1.0, True
    return 2.0 * int(np.logical_and(p, g).sum()) / denom, False


def _cldice_binary(p: np.ndarray, g: np.ndarray) -> tuple[float, bool]:
    sp, sg = thin(p), thin(g)
    np_, ng = int(sp.sum()), int(sg.sum())
    if np_ == 0 and ng == 0:
        return 1.0, True
    if np_ == 0 or ng == 0:
        return 0.0, True
    tprec = int(np.logical_and(sp, g).sum()) / np_
    tsens = int(np.logical_and(sg, p).sum()) / ng
    if tprec + tsens == 0:
        return 0.0, True
    return 2.0 * tprec * tsens / (tprec + tsens), False


def dice(pred: LabelGrid, gt: LabelGrid, include_background: bool = False):
    """Per-class Dice and macro mean. A class empty on both sides scores 1."""
    _check_pair(pred, gt)
    scores = [_dice_binary(pred.mask(c), gt.mask(c))[0] for c in class_list(gt.num_classes, include_background)]
    return scores, float(np.mean(scores))


def cl_dice(pred: LabelGrid, gt: LabelGrid, include_background: bool = False):
    """Per-class clDice on exact skeletons and macro mean."""
    _check_pair(pred, gt)
    scores = [_cldice_binary(pred.mask(c), gt.mask(c))[0] for c in class_list(gt.num_classes, include_background)]
    return scores, float(np.mean(scores))


@dataclass
class MetricsReport:
    dice: list[float]
    dice_mean: float
    cldice: list[float]
    cldice_mean: float
    betti0_error: int
    betti1_error: int
    conventions_applied: int = 0
    betti_per_class: list[tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betti_per_class"] = [list(t) for t in self.betti_per_class]
        return d


def evaluate(pred: LabelGrid, gt: LabelGrid, conn: Connectivity | None = None) -> MetricsReport:
    """Dice, clDice and Betti errors of a prediction against ground truth.

    Betti errors are taken on the binarized foreground of the whole grid;
    per-class errors are listed alongside.
    """
    _check_pair(pred, gt)
    dices, cls, flags = [], [], 0
    per_class = []
    for c in class_list(gt.num_classes):
        p, g = pred.mask(c), gt.mask(c)
        d, f1 = _dice_binary(p, g)
        cd, f2 = _cldice_binary(p, g)
        dices.append(d)
        cls.append(cd)
        flags += int(f1) + int(f2)
        per_class.append(betti_error(p, g, conn))
    e0, e1 = betti_error(binarize(pred), binarize(gt), conn)
    return MetricsReport(
        dice=dices,
        dice_mean=float(np.mean(dices)),
        cldice=cls,
        cldice_mean=float(np.mean(cls)),
        betti0_error=e0,
        betti1_error=e1,
        conventions_applied=flags,
        betti_per_class=per_class,
    )
