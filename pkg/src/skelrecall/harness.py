"""Direct logit optimization on synthetic thin-structure tasks.

Stands in for network training: each case has its own per-cell logits,
optimized by plain gradient descent on generic loss + w * connectivity loss.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import phantoms
from .grid import LabelGrid, ProbGrid, argmax_labels, one_hot
from .losses import ConnectivityKind, LossConfig, combined_loss
from .skeleton import tubed_skeleton
from .topology import BettiSignature, MetricsReport, betti, evaluate

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 500
DEFAULT_LR = 100.0
DEFAULT_INIT_CLAMP = 0.05
MAX_HALVINGS = 40


@dataclass(frozen=True)
class SynthSpec:
    count: int
    dims: tuple[int, ...] = (64, 64)
    rho: float = 0.05
    gap: int = 3
    num_classes: int = 1
    gaps_per_case: int = 2
    max_thickness: int = 1

    def __post_init__(self):
        if not 0.0 <= self.rho < 0.5:
            raise ValueError(f"noise rate must be in [0, 0.5), got {self.rho}")
        if self.gap < 0 or self.count < 0:
            raise ValueError("gap and count must be non-negative")
        if len(self.dims) not in (2, 3):
            raise ValueError("dims must be 2D or 3D")
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")


@dataclass
class SynthCase:
    gt: LabelGrid
    observation: ProbGrid
    seed: int
    gt_betti: BettiSignature
    gaps: int = 0


def synth_case(spec: SynthSpec, seed: int, index: int = 0) -> SynthCase:
    rng = np.random.default_rng([seed, index])
    shape = spec.dims
    kind = ("line", "arc", "tree")[rng.integers(3)]
    if kind == "line":
        segs = phantoms.line(rng, shape)
    elif kind == "arc":
        segs = phantoms.arc(rng, shape)
    else:
        segs = phantoms.tree(rng, shape, spec.num_classes)
    if kind != "tree" and spec.num_classes > 1:
        # Split a single curve into K labeled runs.
        path = segs[0].path
        runs = np.array_split(np.arange(len(path)), spec.num_classes)
        segs = [phantoms.Segment(path[r], i + 1) for i, r in enumerate(runs) if len(r)]
    thickness = int(rng.integers(spec.max_thickness + 1))
    gt = phantoms.paint(shape, segs, thickness)
    observed, made = phantoms.cut_gaps(gt, segs, rng, spec.gap, spec.gaps_per_case, thickness)
    observed = phantoms.flip_band(observed, rng, spec.rho)
    gt_grid = LabelGrid(gt, spec.num_classes)
    obs = one_hot(LabelGrid(observed, spec.num_classes))
    return SynthCase(gt_grid, obs, int(seed) * 1_000_003 + index, betti(gt > 0), made)


def synth_dataset(spec: SynthSpec, seed: int) -> list[SynthCase]:
    """Deterministic list of ``spec.count`` cases for a given seed."""
    return [synth_case(spec, seed, i) for i in range(spec.count)]


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def _softmax_backward(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    return p * (g - np.sum(p * g, axis=0, keepdims=True))


@dataclass
class OptimRun:
    steps: int
    lr: float
    cfg: LossConfig
    final: ProbGrid
    trajectory: list[float]
    metrics: MetricsReport
    final_lr: float = 0.0
    halvings: int = 0
    warnings: list[str] = field(default_factory=list)

    def prediction(self) -> LabelGrid:
        return argmax_labels(self.final)

    def to_record(self) -> dict:
        return {
            "steps": self.steps,
            "lr": self.lr,
            "final_lr": self.final_lr,
            "halvings": self.halvings,
            "w": self.cfg.w,
            "connectivity_kind": self.cfg.connectivity_kind.value,
            "initial_loss": self.trajectory[0],
            "final_loss": self.trajectory[-1],
            "trajectory": self.trajectory,
            "metrics": self.metrics.to_dict(),
            "warnings": self.warnings,
        }


class NonFiniteLoss(RuntimeError):
    pass


def optimize_logits(
    case: SynthCase,
    cfg: LossConfig,
    steps: int = DEFAULT_STEPS,
    lr: float = DEFAULT_LR,
    init_clamp: float = DEFAULT_INIT_CLAMP,
    radius: int = 2,
) -> OptimRun:
    """Gradient descent on per-cell logits, halving the step on any loss increase.

    A step that would raise the loss is rejected and retried at half the rate,
    so the recorded trajectory never increases.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not lr > 0:
        raise ValueError("lr must be positive")
    target = argmax_labels(case.observation)
    kind = cfg.connectivity_kind
    skel = tubed_skeleton(case.gt, radius) if kind is ConnectivityKind.SKELETON_RECALL else None

    def loss_at(z):
        p = softmax(z)
        rep = combined_loss(ProbGrid(p), target, skel, cfg, connectivity_target=case.gt)
        if not np.isfinite(rep.total) or not np.all(np.isfinite(rep.gradient)):
            raise NonFiniteLoss(f"non-finite loss {rep.total} (lr={rate}, step={len(traj)})")
        return p, rep

    rate = float(lr)
    traj: list[float] = []
    z = np.log(np.clip(case.observation.data, init_clamp, 1.0))
    p, rep = loss_at(z)
    traj.append(rep.total)
    halvings = 0
    notes = list(rep.warnings)
    for _ in range(steps):
        gz = _softmax_backward(p, rep.gradient)
        for _ in range(MAX_HALVINGS):
            z_new = z - rate * gz
            p_new, rep_new = loss_at(z_new)
            if rep_new.total <= rep.total:
                z, p, rep = z_new, p_new, rep_new
                break
            rate *= 0.5
            halvings += 1
        traj.append(rep.total)
    final = ProbGrid(p, normalized=True)
    metrics = evaluate(argmax_labels(final), case.gt)
    logger.debug("optimized case %s: loss %.6g -> %.6g", case.seed, traj[0], traj[-1])
    return OptimRun(steps, float(lr), cfg, final, traj, metrics, rate, halvings, notes)


@dataclass(frozen=True)
class SweepRow:
    w: float
    dice: float
    cldice: float
    betti0_error: float
    betti1_error: float

    FIELDS = ("w", "dice", "cldice", "betti0_error", "betti1_error")

    def values(self):
        return [getattr(self, f) for f in self.FIELDS]


def summarize(w: float, runs: list[OptimRun]) -> SweepRow:
    return SweepRow(
        w=float(w),
        dice=float(np.mean([r.metrics.dice_mean for r in runs])),
        cldice=float(np.mean([r.metrics.cldice_mean for r in runs])),
        betti0_error=float(np.mean([r.metrics.betti0_error for r in runs])),
        betti1_error=float(np.mean([r.metrics.betti1_error for r in runs])),
    )


def _run_one(args):
    case, cfg, steps, lr = args
    return optimize_logits(case, cfg, steps, lr)


def weight_sweep(
    cases: list[SynthCase],
    weights: list[float],
    cfg_base: LossConfig = LossConfig(),
    steps: int = DEFAULT_STEPS,
    lr: float = DEFAULT_LR,
    jobs: int = 1,
) -> list[SweepRow]:
    """One row per weight: mean Dice, clDice and Betti errors over all cases."""
    if not weights:
        raise ValueError("weight list must be nonempty")
    rows = []
    for w in weights:
        cfg = replace(cfg_base, w=float(w))
        work = [(c, cfg, steps, lr) for c in cases]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                runs = list(ex.map(_run_one, work))
        else:
            runs = [_run_one(a) for a in work]
        rows.append(summarize(w, runs))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SweepRow.FIELDS)
    for row in rows:
        writer.writerow([repr(v) for v in row.values()])
    return buf.getvalue()
