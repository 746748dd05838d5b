"""Command-line interface.

Exit codes: 0 success, 1 data error (bad file, invalid values), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .grid import Connectivity, LabelGrid, ProbGrid, argmax_labels, binarize, one_hot
from .harness import (
    DEFAULT_LR,
    DEFAULT_STEPS,
    NonFiniteLoss,
    SynthCase,
    SynthSpec,
    optimize_logits,
    sweep_csv,
    synth_dataset,
    weight_sweep,
)
from .io import FormatError, read_grid, write_grid
from .losses import LossConfig, combined_loss
from .skeleton import soft_skeleton, thin, tubed_skeleton
from .topology import betti, evaluate

log = logging.getLogger("skelrecall")


class DataError(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(text: str, dest: str | None) -> None:
    if dest is None:
        return
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text)


def _report(args, inputs: dict, params: dict, results, warnings=()) -> None:
    doc = {
        "command": args.command,
        "inputs": inputs,
        "params": params,
        "results": results,
        "warnings": list(warnings),
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.json)


def _labels(path: str) -> LabelGrid:
    grid = read_grid(path)
    return argmax_labels(grid) if isinstance(grid, ProbGrid) else grid


def _probs(path: str) -> ProbGrid:
    grid = read_grid(path)
    return one_hot(grid) if isinstance(grid, LabelGrid) else grid


def _conn(args, ndim: int) -> Connectivity | None:
    if args.conn is None:
        return None
    try:
        return Connectivity.parse(args.conn, ndim)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _loss_cfg(args) -> LossConfig:
    return LossConfig(w=args.w, connectivity_kind=args.kind, soft_skel_iters=args.iters)


def _spec(args) -> SynthSpec:
    return SynthSpec(
        count=args.count,
        dims=args.dims,
        rho=args.rho,
        gap=args.gap,
        num_classes=args.classes,
        gaps_per_case=args.gaps,
    )


def _spec_params(spec: SynthSpec, seed: int) -> dict:
    return {
        "count": spec.count,
        "dims": list(spec.dims),
        "rho": spec.rho,
        "gap": spec.gap,
        "classes": spec.num_classes,
        "gaps_per_case": spec.gaps_per_case,
        "seed": seed,
    }


# --- subcommands -------------------------------------------------------------


def cmd_skeletonize(args):
    y = _labels(args.input)
    skel = thin(binarize(y))
    write_grid(LabelGrid(skel.astype(np.int32), 1), args.output)
    _report(args, {"input": args.input}, {}, {"output": args.output, "skeleton_cells": int(skel.sum())})


def cmd_tube(args):
    y = _labels(args.input)
    s = tubed_skeleton(y, args.radius, args.clip)
    write_grid(LabelGrid(s.data, s.num_classes), args.output)
    _report(
        args,
        {"input": args.input},
        {"radius": args.radius, "clip": args.clip},
        {"output": args.output, "tube_cells": int((s.data > 0).sum())},
    )


def cmd_softskel(args):
    p = _probs(args.input)
    out = np.zeros_like(p.data)
    for c in range(1, p.num_classes + 1):
        out[c] = soft_skeleton(p.data[c], args.iters)
    write_grid(ProbGrid(out), args.output)
    _report(args, {"input": args.input}, {"iters": args.iters}, {"output": args.output, "mass": float(out.sum())})


def cmd_betti(args):
    y = _labels(args.input)
    conn = _conn(args, y.ndim)
    sig = betti(binarize(y), conn)
    results = {"beta0": sig.beta0, "beta1": sig.beta1, "beta2": sig.beta2}
    _report(args, {"input": args.input}, {"conn": (conn or Connectivity.full(y.ndim)).value}, results)
    if args.json is None:
        print(f"{sig.beta0} {sig.beta1} {sig.beta2}")


def cmd_metrics(args):
    pred, gt = _labels(args.pred), _labels(args.gt)
    if pred.dims != gt.dims or pred.num_classes != gt.num_classes:
        raise DataError(f"prediction {pred.dims}/K={pred.num_classes} vs ground truth {gt.dims}/K={gt.num_classes}")
    conn = _conn(args, gt.ndim)
    rep = evaluate(pred, gt, conn)
    _report(args, {"pred": args.pred, "gt": args.gt}, {"conn": (conn or Connectivity.full(gt.ndim)).value}, rep.to_dict())
    if args.json is None:
        print(f"dice {rep.dice_mean:.6f} cldice {rep.cldice_mean:.6f} b0err {rep.betti0_error} b1err {rep.betti1_error}")


def cmd_loss(args):
    p, y = _probs(args.pred), _labels(args.gt)
    cfg = _loss_cfg(args)
    s = tubed_skeleton(y, args.radius, args.clip) if cfg.connectivity_kind.value == "skeleton_recall" else None
    rep = combined_loss(p, y, s, cfg)
    if args.grad:
        scale = float(np.max(np.abs(rep.gradient))) or 1.0
        # Gradients are signed; stored scaled into [0, 1] around 0.5.
        write_grid(ProbGrid(0.5 + 0.5 * rep.gradient / scale), args.grad)
    params = {"w": cfg.w, "kind": cfg.connectivity_kind.value, "iters": cfg.soft_skel_iters, "radius": args.radius, "clip": args.clip}
    _report(args, {"pred": args.pred, "gt": args.gt}, params, {"total": rep.total, **rep.parts}, rep.warnings)
    if args.json is None:
        print(f"{rep.total:.10g}")


def cmd_synth(args):
    spec = _spec(args)
    cases = synth_dataset(spec, args.seed)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    listing = []
    for i, case in enumerate(cases):
        gt_path, obs_path = out / f"gt_{i:03d}.skt", out / f"obs_{i:03d}.skt"
        write_grid(case.gt, gt_path)
        write_grid(argmax_labels(case.observation), obs_path)
        listing.append({"gt": gt_path.name, "observation": obs_path.name, "betti": list(case.gt_betti.as_tuple()), "gaps": case.gaps})
    _report(args, {}, _spec_params(spec, args.seed), {"cases": listing})


def _cases_for(args) -> tuple[list[SynthCase], dict]:
    if args.gt or args.obs:
        if not (args.gt and args.obs):
            raise DataError("--gt and --obs must be given together")
        gt = _labels(args.gt)
        obs = _probs(args.obs)
        return [SynthCase(gt, obs, args.seed, betti(binarize(gt)))], {"gt": args.gt, "obs": args.obs}
    spec = _spec(args)
    return synth_dataset(spec, args.seed), {"synth": _spec_params(spec, args.seed)}


def cmd_optimize(args):
    cases, inputs = _cases_for(args)
    cfg = _loss_cfg(args)
    records = []
    for case in cases:
        run = optimize_logits(case, cfg, args.steps, args.lr)
        records.append(run.to_record())
        if args.out and len(cases) == 1:
            write_grid(run.prediction(), args.out)
    params = {"w": cfg.w, "kind": cfg.connectivity_kind.value, "steps": args.steps, "lr": args.lr}
    _report(args, inputs, params, {"runs": records})
    if args.json is None:
        for r in records:
            m = r["metrics"]
            print(f"loss {r['final_loss']:.6g} dice {m['dice_mean']:.4f} cldice {m['cldice_mean']:.4f} b0err {m['betti0_error']}")


def cmd_sweep(args):
    cases, inputs = _cases_for(args)
    cfg = _loss_cfg(args)
    rows = weight_sweep(cases, list(args.w_list), cfg, args.steps, args.lr, jobs=args.jobs)
    table = sweep_csv(rows)
    _emit(table, args.csv)
    params = {"w_list": list(args.w_list), "kind": cfg.connectivity_kind.value, "steps": args.steps, "lr": args.lr}
    _report(args, inputs, params, {"rows": [dict(zip(r.FIELDS, r.values())) for r in rows]})
    if args.csv is None and args.json is None:
        sys.stdout.write(table)


def cmd_bench(args):
    if args.reps < 3:
        raise DataError("--reps must be >= 3")
    rows = bench_mod.bench(args.op, args.dims, args.classes, args.reps, args.seed, memory=not args.no_memory)
    _emit(bench_mod.bench_csv(rows), args.csv)
    ratios = {str(k): v for k, v in bench_mod.ratios(rows).items()}
    params = {"op": args.op, "dims": list(args.dims), "classes": list(args.classes), "reps": args.reps, "seed": args.seed}
    _report(args, {}, params, {"rows": [r.to_dict() for r in rows], "soft_over_tube": ratios})
    if args.csv is None and args.json is None:
        sys.stdout.write(bench_mod.bench_csv(rows))


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skelrecall", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--json", metavar="OUT", help="write a JSON report ('-' for stdout)")

    tube_opts = argparse.ArgumentParser(add_help=False)
    tube_opts.add_argument("--radius", type=int, default=2)
    tube_opts.add_argument("--clip", action=argparse.BooleanOptionalAction, default=True)

    loss_opts = argparse.ArgumentParser(add_help=False)
    loss_opts.add_argument("--w", type=float, default=1.0)
    loss_opts.add_argument("--kind", choices=["none", "skeleton_recall", "soft_cldice"], default="skeleton_recall")
    loss_opts.add_argument("--iters", type=int, default=3, help="soft skeleton iterations")

    synth_opts = argparse.ArgumentParser(add_help=False)
    synth_opts.add_argument("--count", type=int, default=1)
    synth_opts.add_argument("--dims", type=_ints, default=(64, 64))
    synth_opts.add_argument("--rho", type=float, default=0.05)
    synth_opts.add_argument("--gap", type=int, default=3)
    synth_opts.add_argument("--gaps", type=int, default=2, help="gap segments per case")
    synth_opts.add_argument("--classes", type=int, default=1)
    synth_opts.add_argument("--seed", type=int, default=0)

    run_opts = argparse.ArgumentParser(add_help=False)
    run_opts.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    run_opts.add_argument("--lr", type=float, default=DEFAULT_LR)
    run_opts.add_argument("--gt", help="ground-truth label file instead of synthetic cases")
    run_opts.add_argument("--obs", help="observation file (labels or probabilities)")

    p = sub.add_parser("skeletonize", parents=[out], help="exact thinning of the foreground")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_skeletonize)

    p = sub.add_parser("tube", parents=[out, tube_opts], help="multi-class tubed skeleton")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_tube)

    p = sub.add_parser("softskel", parents=[out], help="soft skeleton of every class channel")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--iters", type=int, default=10)
    p.set_defaults(func=cmd_softskel)

    p = sub.add_parser("betti", parents=[out], help="Betti numbers of the foreground")
    p.add_argument("input")
    p.add_argument("--conn", help="foreground connectivity, e.g. 8 or 3D-26")
    p.set_defaults(func=cmd_betti)

    p = sub.add_parser("metrics", parents=[out], help="Dice, clDice and Betti errors")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--conn")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("loss", parents=[out, tube_opts, loss_opts], help="combined loss of a prediction")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--grad", metavar="OUT", help="write the rescaled gradient as a float SKT")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("synth", parents=[out, synth_opts], help="write synthetic gap cases")
    p.add_argument("output", help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("optimize", parents=[out, loss_opts, synth_opts, run_opts], help="direct logit optimization")
    p.add_argument("--out", help="write the thresholded prediction (single case)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", parents=[out, loss_opts, synth_opts, run_opts], help="connectivity weight sweep")
    p.add_argument("--w-list", type=_floats, default=(0.0, 0.1, 1.0))
    p.add_argument("--csv", metavar="OUT")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", parents=[out], help="time tube vs soft pipelines")
    p.add_argument("--op", choices=["tube", "soft", "both"], default="both")
    p.add_argument("--dims", type=_ints, default=(64, 64, 64))
    p.add_argument("--classes", type=_ints, default=(1,))
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", metavar="OUT")
    p.add_argument("--no-memory", action="store_true", help="skip the traced peak-memory run")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (DataError, FormatError, ValueError, OSError, NonFiniteLoss) as exc:
        print(f"skelrecall {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
