"""Loss values with gradients w.r.t. predicted probabilities.

Every loss returns ``(value, gradient)`` where the gradient has the shape of
the probability array, ``(K + 1, *dims)``. Background (channel 0) is left out
of the class set unless asked for.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .grid import LabelGrid, ProbGrid, class_list
from .skeleton import TubedSkeleton, soft_skeleton_vjp


class ConnectivityKind(str, Enum):
    NONE = "none"
    SKELETON_RECALL = "skeleton_recall"
    SOFT_CLDICE = "soft_cldice"


@dataclass(frozen=True)
class LossConfig:
    w: float = 1.0
    connectivity_kind: ConnectivityKind = ConnectivityKind.SKELETON_RECALL
    soft_skel_iters: int = 3
    dice_smooth: float = 1e-5
    cldice_smooth: float = 1e-8
    ce_clamp: float = 1e-7
    include_background: bool = False

    def __post_init__(self):
        object.__setattr__(self, "connectivity_kind", ConnectivityKind(self.connectivity_kind))
        if not self.w >= 0:
            raise ValueError("w must be non-negative")
        if self.dice_smooth <= 0 or self.cldice_smooth <= 0:
            raise ValueError("smoothing terms must be positive")


@dataclass
class LossReport:
    total: float
    parts: dict[str, float]
    gradient: np.ndarray
    warnings: list[str] = field(default_factory=list)


def _check(p: ProbGrid, y: LabelGrid) -> None:
    if p.dims != y.dims or p.num_classes != y.num_classes:
        raise ValueError(
            f"prediction {p.num_classes} classes {p.dims} vs target {y.num_classes} classes {y.dims}"
        )


def skeleton_recall_loss(p: ProbGrid, s: TubedSkeleton, include_background: bool = False):
    """Negative soft recall of the prediction on the tubed skeleton, averaged over classes.

    Classes whose skeleton is empty are left out of the average. If every
    class is empty the loss is 0 with a zero gradient and a RuntimeWarning.
    """
    _check(p, s)
    k = p.num_classes
    labels = s.data.ravel()
    probs = p.data.reshape(k + 1, -1)
    sizes = np.bincount(labels, minlength=k + 1).astype(np.float64)
    classes = [c for c in class_list(k, include_background) if sizes[c] > 0]
    grad = np.zeros_like(probs)
    if not classes:
        warnings.warn("skeleton recall: every class skeleton is empty", RuntimeWarning, stacklevel=2)
        return 0.0, grad.reshape(p.data.shape)
    # Gather the probability of each cell's own skeleton class: O(cells), not O(K * cells).
    cells = np.arange(labels.size)
    hits = np.bincount(labels, weights=probs[labels, cells], minlength=k + 1)
    active = np.zeros(k + 1, dtype=bool)
    active[classes] = True
    on = active[labels]
    n = len(classes)
    grad[labels[on], cells[on]] = -1.0 / (n * sizes[labels[on]])
    value = 0.0 - float(np.sum(hits[classes] / sizes[classes])) / n
    return value, grad.reshape(p.data.shape)


def soft_dice_loss(p: ProbGrid, y: LabelGrid, smooth: float = 1e-5, include_background: bool = False):
    """Macro mean over classes of 1 - (2 sum(p g) + eps) / (sum p + sum g + eps)."""
    _check(p, y)
    classes = class_list(y.num_classes, include_background)
    grad = np.zeros_like(p.data)
    total = 0.0
    for c in classes:
        pc = p.data[c]
        g = (y.data == c).astype(np.float64)
        inter = float(np.sum(pc * g))
        denom = float(np.sum(pc)) + float(np.sum(g)) + smooth
        num = 2.0 * inter + smooth
        total += 1.0 - num / denom
        grad[c] = -(2.0 * g * denom - num) / (denom * denom)
    n = len(classes)
    return total / n, grad / n


def cross_entropy_loss(p: ProbGrid, y: LabelGrid, clamp: float = 1e-7):
    """Mean over cells of -log p[true class], probabilities clamped to [clamp, 1 - clamp]."""
    _check(p, y)
    true_p = np.take_along_axis(p.data, y.data[None].astype(np.intp), axis=0)[0]
    clipped = np.clip(true_p, clamp, 1.0 - clamp)
    n = true_p.size
    value = float(np.mean(-np.log(clipped)))
    inside = (true_p >= clamp) & (true_p <= 1.0 - clamp)
    grad = np.zeros_like(p.data)
    np.put_along_axis(
        grad, y.data[None].astype(np.intp), np.where(inside, -1.0 / (n * clipped), 0.0)[None], axis=0
    )
    return value, grad


def soft_cldice_loss(
    p: ProbGrid,
    y: LabelGrid,
    iters: int = 3,
    smooth: float = 1e-8,
    include_background: bool = False,
    with_grad: bool = True,
):
    """1 - soft clDice per class, averaged; gradient is a min/max-path subgradient."""
    _check(p, y)
    classes = class_list(y.num_classes, include_background)
    grad = np.zeros_like(p.data)
    total = 0.0
    for c in classes:
        pc = p.data[c]
        g = (y.data == c).astype(np.float64)
        sp, back = soft_skeleton_vjp(pc, iters, keep_tape=with_grad)
        sg, _ = soft_skeleton_vjp(g, iters, keep_tape=False)
        sp_sum, sg_sum = float(sp.sum()), float(sg.sum())
        prec_num = float(np.sum(sp * g)) + smooth
        sens_num = float(np.sum(sg * pc)) + smooth
        tprec = prec_num / (sp_sum + smooth)
        tsens = sens_num / (sg_sum + smooth)
        s = tprec + tsens
        total += 1.0 - 2.0 * tprec * tsens / s
        if with_grad:
            d_prec = -2.0 * tsens * tsens / (s * s)
            d_sens = -2.0 * tprec * tprec / (s * s)
            g_sp = d_prec * (g * (sp_sum + smooth) - prec_num) / (sp_sum + smooth) ** 2
            grad[c] = back(g_sp) + d_sens * sg / (sg_sum + smooth)
    n = len(classes)
    return total / n, grad / n


def combined_loss(
    p: ProbGrid,
    y: LabelGrid,
    s: TubedSkeleton | None = None,
    cfg: LossConfig = LossConfig(),
    connectivity_target: LabelGrid | None = None,
) -> LossReport:
    """Generic loss (cross-entropy + soft Dice) plus w times the connectivity term.

    ``connectivity_target`` lets soft clDice compare against a different label
    grid than the generic terms; it defaults to ``y``.
    """
    _check(p, y)
    dice_v, dice_g = soft_dice_loss(p, y, cfg.dice_smooth, cfg.include_background)
    ce_v, ce_g = cross_entropy_loss(p, y, cfg.ce_clamp)
    total = dice_v + ce_v
    grad = dice_g + ce_g
    notes: list[str] = []
    kind = cfg.connectivity_kind
    conn_v = 0.0
    if kind is ConnectivityKind.SKELETON_RECALL:
        if s is None:
            raise ValueError("skeleton_recall needs a tubed skeleton")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            conn_v, conn_g = skeleton_recall_loss(p, s, cfg.include_background)
        notes += [str(w.message) for w in caught]
    elif kind is ConnectivityKind.SOFT_CLDICE:
        ref = y if connectivity_target is None else connectivity_target
        conn_v, conn_g = soft_cldice_loss(
            p, ref, cfg.soft_skel_iters, cfg.cldice_smooth, cfg.include_background, with_grad=cfg.w != 0
        )
    if kind is not ConnectivityKind.NONE and cfg.w != 0:
        total = total + cfg.w * conn_v
        grad = grad + cfg.w * conn_g
    return LossReport(
        total=float(total),
        parts={"generic_dice": dice_v, "generic_ce": ce_v, "connectivity": conn_v},
        gradient=grad,
        warnings=notes,
    )
