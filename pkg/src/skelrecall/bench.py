"""CPU wall-time and peak-memory comparison of the two connectivity pipelines.

``tube``: tubed skeleton of the labels + skeleton recall loss and gradient.
``soft``: soft clDice loss and subgradient with 25-iteration soft skeletons.
Both run on the same synthetic multi-class vessel tree and prediction.
"""

from __future__ import annotations

import csv
import gc
import io
import statistics
import time
import tracemalloc
from dataclasses import asdict, dataclass

import numpy as np

from . import phantoms
from .grid import LabelGrid, ProbGrid, one_hot
from .losses import skeleton_recall_loss, soft_cldice_loss
from .skeleton import tubed_skeleton

SOFT_ITERS = 25
OPS = ("tube", "soft")


@dataclass
class BenchReport:
    op: str
    dims: tuple[int, ...]
    num_classes: int
    reps: int
    mean_s: float
    stdev_s: float
    peak_mem_bytes: int
    loss: float

    FIELDS = ("op", "dims", "num_classes", "reps", "mean_s", "stdev_s", "peak_mem_bytes", "loss")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = list(self.dims)
        return d


def bench_inputs(dims, num_classes: int, seed: int = 0) -> tuple[LabelGrid, ProbGrid]:
    """Vessel-like tree whose branches cycle through the classes, plus a softened prediction.

    The foreground does not depend on ``num_classes``; only the labeling does.
    """
    rng = np.random.default_rng(seed)
    segs = phantoms.tree(rng, dims, num_classes=1, depth=4)
    for i, seg in enumerate(segs):
        seg.label = i % num_classes + 1
    y = LabelGrid(phantoms.paint(dims, segs, thickness=1), num_classes)
    p = 0.9 * one_hot(y).data + 0.1 / (num_classes + 1)
    return y, ProbGrid(p, normalized=True)


def run_tube(y: LabelGrid, p: ProbGrid) -> float:
    s = tubed_skeleton(y, radius=2)
    value, _ = skeleton_recall_loss(p, s)
    return value


def run_soft(y: LabelGrid, p: ProbGrid, iters: int = SOFT_ITERS) -> float:
    value, _ = soft_cldice_loss(p, y, iters=iters)
    return value


PIPELINES = {"tube": run_tube, "soft": run_soft}


def _peak_memory(fn, *args) -> int:
    gc.collect()
    tracemalloc.start()
    try:
        base = tracemalloc.get_traced_memory()[0]
        tracemalloc.reset_peak()
        fn(*args)
        return max(0, tracemalloc.get_traced_memory()[1] - base)
    finally:
        tracemalloc.stop()


def time_pipeline(op: str, y: LabelGrid, p: ProbGrid, reps: int = 3, memory: bool = True) -> BenchReport:
    if reps < 3:
        raise ValueError("reps must be >= 3")
    fn = PIPELINES[op]
    value = fn(y, p)  # warm-up, also triggers JIT compilation
    times = []
    for _ in range(reps):
        gc.collect()
        t0 = time.perf_counter()
        fn(y, p)
        times.append(time.perf_counter() - t0)
    peak = _peak_memory(fn, y, p) if memory else 0
    return BenchReport(
        op=op,
        dims=tuple(y.dims),
        num_classes=y.num_classes,
        reps=reps,
        mean_s=statistics.fmean(times),
        stdev_s=statistics.stdev(times),
        peak_mem_bytes=peak,
        loss=value,
    )


def bench(op: str, dims, classes, reps: int = 3, seed: int = 0, memory: bool = True) -> list[BenchReport]:
    """Time the selected pipelines (``tube``, ``soft`` or ``both``) for every class count."""
    ops = OPS if op == "both" else (op,)
    for o in ops:
        if o not in PIPELINES:
            raise ValueError(f"unknown bench op {o!r}")
    rows = []
    for k in classes:
        y, p = bench_inputs(tuple(dims), int(k), seed)
        for o in ops:
            rows.append(time_pipeline(o, y, p, reps, memory))
    return rows


def ratios(rows: list[BenchReport]) -> dict[int, float]:
    """soft / tube mean wall time per class count, where both were measured."""
    by = {(r.op, r.num_classes): r for r in rows}
    out = {}
    for (op, k), r in by.items():
        if op == "tube" and ("soft", k) in by:
            out[k] = by[("soft", k)].mean_s / r.mean_s
    return out


def bench_csv(rows: list[BenchReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BenchReport.FIELDS)
    for r in rows:
        d = r.to_dict()
        d["dims"] = "x".join(str(n) for n in r.dims)
        writer.writerow([d[f] if not isinstance(d[f], float) else repr(d[f]) for f in BenchReport.FIELDS])
    return buf.getvalue()
