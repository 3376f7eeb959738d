"""Command-line surface: simulate, ffm, eval, flops, lr, loss.

Every subcommand is a pure function of its input files and flags — no
clock, network, or environment dependence — so reruns with the same
inputs are byte-identical. Exit codes: 0 success, 2 configuration error
(bad flags, bad config keys), 1 runtime error (bad data files, failed
verification, infeasible generation).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import complexity as cx
from . import zoo
from .evaluation import UndefinedMetricError, evaluate_run
from .fusion import run_pipeline
from .geometry import BBox, InvalidBoxError
from .io import (
    ConfigError,
    DataError,
    RunConfig,
    format_float,
    load_run_config,
    load_scene_config,
    read_detections_jsonl,
    read_ground_truth_jsonl,
    write_detections_jsonl,
    write_ground_truth_jsonl,
)
from .losses import BoundaryError, iou_loss, loss_gradient, wiou_loss
from .micronn import ConvKernelSet, FeatureMap, MacCounter, SEWeights, conv2d_direct, ghost_forward, se_forward
from .schedule import ScheduleConfig, schedule_csv
from .simulate import PlacementError, generate_scenes


class _VerifyFailure(RuntimeError):
    pass


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg, n_scenes = load_scene_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenes = generate_scenes(cfg, n_scenes)

    gts = [g for s in scenes for g in s.body_gts]
    part_dets = [d for s in scenes for d in s.part_dets]
    body_dets = [d for s in scenes for d in s.body_dets]
    write_ground_truth_jsonl(out_dir / "gt.jsonl", gts)
    write_detections_jsonl(out_dir / "part_dets.jsonl", part_dets)
    write_detections_jsonl(out_dir / "body_dets.jsonl", body_dets)

    manifest = {
        "n_scenes": n_scenes,
        "config": asdict(cfg),
        "scenes": [
            {
                "image_id": s.image_id,
                "seed": s.config.seed,
                "n_pedestrians": len(s.pedestrians),
                "n_occluders": len(s.occluders),
                "n_part_dets": len(s.part_dets),
                "n_body_dets": len(s.body_dets),
            }
            for s in scenes
        ],
        "totals": {
            "pedestrians": sum(len(s.pedestrians) for s in scenes),
            "part_dets": len(part_dets),
            "body_dets": len(body_dets),
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    print(f"{n_scenes} scenes, {len(gts)} pedestrians -> {out_dir}")
    return 0


def _cmd_ffm(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    dets = read_detections_jsonl(args.dets)
    fused = run_pipeline(dets, rules=cfg.rules, cfg=cfg.fusion, nms_cfg=cfg.nms)
    write_detections_jsonl(args.out, fused)
    print(f"{len(dets)} detections in, {len(fused)} out -> {args.out}")
    return 0


def _parse_named_dets(spec: str) -> tuple[str, str]:
    if "=" in spec:
        name, path = spec.split("=", 1)
        if not name:
            raise ConfigError(f"dets: empty run name in {spec!r}")
        return name, path
    return Path(spec).stem, spec


def _cmd_eval(args: argparse.Namespace) -> int:
    gts = read_ground_truth_jsonl(args.gt)
    runs: dict[str, dict] = {}
    for spec in args.dets:
        name, path = _parse_named_dets(spec)
        if name in runs:
            raise ConfigError(f"dets: duplicate run name {name!r}")
        dets = read_detections_jsonl(path)
        report = evaluate_run(dets, gts, iou_thr=args.iou, ap_mode=args.ap_mode)
        runs[name] = {
            "mean_ap": report.mean_ap,
            "per_class": {
                cls: {"ap": r.ap, "n_gt": r.n_gt, "n_det": r.n_det,
                      "tp": r.tp, "fp": r.fp}
                for cls, r in report.per_class.items()
            },
            "per_group": report.per_group,
            "group_mean_ap": report.group_mean_ap,
        }
        print(f"run {name} mean_ap {format_float(report.mean_ap)}")
        for grp in sorted(report.group_mean_ap):
            print(f"run {name} group {grp} ap {format_float(report.group_mean_ap[grp])}")
    if args.report:
        payload = {"iou_thr": args.iou, "ap_mode": args.ap_mode, "runs": runs}
        Path(args.report).write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        )
    return 0


def _load_model(name_or_path: str) -> cx.ModelSpec:
    p = Path(name_or_path)
    if p.exists():
        return cx.load_model_spec(str(p))
    if name_or_path in zoo.BUILTIN_NAMES:
        return zoo.builtin_spec(name_or_path)
    raise ConfigError(
        f"model: {name_or_path!r} is neither a file nor a builtin "
        f"(builtins: {', '.join(zoo.BUILTIN_NAMES)})"
    )


def _verify_counts() -> list[str]:
    """Run tiny layers through the reference forward passes and compare the
    observed MAC counts against the analytical formulas. Returns a list of
    human-readable check lines; raises _VerifyFailure on the first mismatch."""
    rng = np.random.default_rng(2024)
    lines = []

    def check(label: str, observed: int, analytical: int) -> None:
        if observed != analytical:
            raise _VerifyFailure(
                f"{label}: observed {observed} != analytical {analytical}"
            )
        lines.append(f"ok {label}: {observed} MACs")

    for (c1, c2, n, stride, h, w) in ((3, 8, 3, 1, 8, 8), (4, 6, 1, 2, 9, 7), (2, 4, 5, 2, 11, 6)):
        x = FeatureMap(rng.normal(size=(h, w, c1)))
        kern = ConvKernelSet(rng.normal(size=(c2, n, n, c1)))
        counter = MacCounter()
        conv2d_direct(x, kern, stride=stride, pad=cx.same_pad(n), counter=counter)
        check(f"conv c1={c1} c2={c2} n={n} stride={stride} in={h}x{w}",
              counter.total, cx.conv_flops(c1, c2, n, h, w, stride))

    for (c1, c2, n, s, l, stride, h, w) in ((4, 8, 1, 2, 3, 1, 6, 6), (3, 9, 3, 3, 3, 2, 8, 8), (6, 8, 1, 4, 5, 1, 7, 5)):
        m = c2 // s
        x = FeatureMap(rng.normal(size=(h, w, c1)))
        primary = ConvKernelSet(rng.normal(size=(m, n, n, c1)))
        cheap = rng.normal(size=((s - 1) * m, l, l))
        counter = MacCounter()
        ghost_forward(x, primary, cheap, s=s, stride=stride, pad=cx.same_pad(n), counter=counter)
        check(f"ghost c1={c1} c2={c2} n={n} s={s} l={l} stride={stride} in={h}x{w}",
              counter.total, cx.ghost_flops(c1, c2, n, h, w, s, l, stride))

    for (c, r, h, w) in ((8, 4, 5, 5), (16, 16, 4, 6)):
        x = FeatureMap(rng.normal(size=(h, w, c)))
        weights = SEWeights(c=c, r=r, fc1=rng.normal(size=(c // r, c)),
                            fc2=rng.normal(size=(c, c // r)))
        counter = MacCounter()
        se_forward(x, weights, counter=counter)
        check(f"se c={c} r={r} in={h}x{w}", counter.total, cx.se_flops(c, r, h, w))

    # A 1x1 convolution on a 1x1 map is exactly a fully connected layer.
    c1, c2 = 12, 5
    x = FeatureMap(rng.normal(size=(1, 1, c1)))
    kern = ConvKernelSet(rng.normal(size=(c2, 1, 1, c1)))
    counter = MacCounter()
    conv2d_direct(x, kern, counter=counter)
    check(f"fc c1={c1} c2={c2}", counter.total, cx.fc_flops(c1, c2))
    return lines


def _cmd_flops(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    report = cx.summarize(model)
    scale = 2 if args.units == "flops" else 1
    print(f"model {report.name}")
    print(f"layers {len(report.rows)}")
    print(f"params {report.total_params}")
    print(f"{args.units} {report.total_flops * scale}")
    print(f"gflops {2 * report.total_flops / 1e9:.6f}")
    if args.compare:
        other = cx.summarize(_load_model(args.compare))
        delta = cx.compare(report, other)
        print(f"compare {other.name}")
        print(f"compare_params {other.total_params}")
        print(f"compare_{args.units} {other.total_flops * scale}")
        print(f"compare_gflops {2 * other.total_flops / 1e9:.6f}")
        print(f"param_reduction_pct {delta.param_reduction_pct:.4f}")
        print(f"flops_reduction_pct {delta.flops_reduction_pct:.4f}")
    if args.verify:
        for line in _verify_counts():
            print(line)
        print("verify ok")
    return 0


def _cmd_lr(args: argparse.Namespace) -> int:
    try:
        cfg = ScheduleConfig(
            total_epochs=args.epochs,
            warmup_epochs=args.warmup,
            lr_peak=args.peak,
            lr_start=args.start,
            lr_final_fraction=args.final_fraction,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    text = schedule_csv(cfg)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"{cfg.total_epochs} epochs -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_loss(args: argparse.Namespace) -> int:
    try:
        pred = BBox(*args.pred)
        gt = BBox(*args.gt)
    except InvalidBoxError as exc:
        raise ConfigError(str(exc)) from None
    value = wiou_loss(pred, gt) if args.kind == "wiou" else iou_loss(pred, gt)
    print(f"loss {format_float(value)}")
    if args.grad:
        g = loss_gradient(pred, gt)
        print("grad " + " ".join(format_float(v) for v in g))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pedfuse",
        description="Part-based pedestrian detection toolkit: occlusion "
        "simulation, box fusion, evaluation, and model complexity analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic occlusion scenes")
    p.add_argument("--config", required=True, help="scene config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("ffm", help="fuse part detections into whole-body boxes")
    p.add_argument("--dets", required=True, help="part detections JSONL")
    p.add_argument("--config", help="pipeline config JSON (defaults apply if omitted)")
    p.add_argument("--out", required=True, help="fused detections JSONL")
    p.set_defaults(fn=_cmd_ffm)

    p = sub.add_parser("eval", help="average precision against ground truth")
    p.add_argument("--dets", required=True, action="append",
                   help="detections JSONL, optionally name=path; repeatable")
    p.add_argument("--gt", required=True, help="ground truth JSONL")
    p.add_argument("--iou", type=float, default=0.5, help="matching IoU threshold")
    p.add_argument("--ap-mode", choices=("all_point", "11point"),
                   default="all_point", help="AP integration mode")
    p.add_argument("--report", help="write a JSON report here")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("flops", help="analytical parameters and FLOPs")
    p.add_argument("--model", required=True,
                   help="model spec JSON path or builtin name")
    p.add_argument("--compare", help="second model to diff against")
    p.add_argument("--verify", action="store_true",
                   help="cross-check formulas against reference forward passes")
    p.add_argument("--units", choices=("macs", "flops"), default="macs",
                   help="macs = multiply-adds; flops = 2x macs")
    p.set_defaults(fn=_cmd_flops)

    p = sub.add_parser("lr", help="warmup + cosine learning-rate schedule")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--peak", type=float, default=0.01)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--final-fraction", type=float, default=0.01)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(fn=_cmd_lr)

    p = sub.add_parser("loss", help="IoU-family loss between two boxes")
    p.add_argument("--pred", type=float, nargs=4, required=True,
                   metavar=("CX", "CY", "W", "H"))
    p.add_argument("--gt", type=float, nargs=4, required=True,
                   metavar=("CX", "CY", "W", "H"))
    p.add_argument("--kind", choices=("wiou", "iou"), default="wiou")
    p.add_argument("--grad", action="store_true", help="also print the gradient")
    p.set_defaults(fn=_cmd_loss)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except cx.SpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, PlacementError, BoundaryError, _VerifyFailure,
            UndefinedMetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
