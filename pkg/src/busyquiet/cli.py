"""Command-line surface: disentangle, kernel, flops, check, bench, train-toy, graph.

Exit codes: 0 on success, 1 on validation or processing failures, 2 on usage
errors (argparse's convention).  All randomness is seeded; the BQ_THREADS
environment variable (0 = auto) caps internal parallelism, which the current
implementation satisfies trivially by computing sequentially.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bench import run_bench
from .bqn import build_bqn, forward, load_bqn_config
from .checks import run_check_suites
from .clip import ResizePolicy, bilinear_resize
from .disentangle import DisentangleConfig, disentangle, quiet_raw
from .errors import BusyQuietError, ConfigError
from .io import FrameSequenceSource, export_visualization, load_frames, load_raw, save_raw
from .kernels import export_kernel, log_kernel, temporal_highpass_kernel
from .mbpm import count_macs, count_params, finite_diff_check, init_mbpm, mac_breakdown
from .synthetic import moving_square_dataset
from .train import init_head, train_toy

TOY_DEFAULTS = {"sigma": 1.1, "k": 5, "lr": 10.0, "steps": 500, "head_scale": 2.0}


def _parse_shape(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"shape must be T,C,H,W, got {text!r}")
    try:
        t, c, h, w = (int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"shape must be four integers, got {text!r}") from exc
    if min(t, c, h, w) < 1:
        raise ConfigError(f"shape entries must be positive, got {text!r}")
    return t, c, h, w


def _threads_cap() -> int | None:
    raw = os.environ.get("BQ_THREADS")
    if raw is None:
        return None
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"BQ_THREADS must be an integer, got {raw!r}") from exc
    if cap < 0:
        raise ConfigError(f"BQ_THREADS must be >= 0, got {cap}")
    return cap


def _cmd_disentangle(args) -> int:
    source = FrameSequenceSource(
        directory=Path(args.in_dir), fmt=args.format, channels=args.channels
    )
    clip = load_frames(source)
    if args.busy_size is not None and (clip.h, clip.w) != (args.busy_size, args.busy_size):
        clip = bilinear_resize(clip, ResizePolicy(out_h=args.busy_size, out_w=args.busy_size))
    if clip.t % 3 != 0:
        raise ConfigError(f"frame count {clip.t} is not divisible by 3")
    config = DisentangleConfig(
        sigma=args.sigma,
        k=args.k,
        busy_size=(clip.h, clip.w),
        quiet_size=(args.quiet_size, args.quiet_size),
        segments=clip.t // 3,
    )
    params = init_mbpm(args.sigma, args.k, clip.c, 3, norm_mode=args.log_norm)
    pair = disentangle(clip, config, params)
    busy_dir = Path(args.out_busy)
    quiet_dir = Path(args.out_quiet)
    busy_dir.mkdir(parents=True, exist_ok=True)
    quiet_dir.mkdir(parents=True, exist_ok=True)
    save_raw(pair.busy, busy_dir / "clip.bqc1")
    save_raw(pair.quiet, quiet_dir / "clip.bqc1")
    if args.emit_quiet_raw:
        save_raw(quiet_raw(clip, pair.busy), Path(args.emit_quiet_raw))
    if args.viz:
        export_visualization(pair.busy, busy_dir / "viz")
        export_visualization(pair.quiet, quiet_dir / "viz")
    print(
        f"busy {pair.busy.t}x{pair.busy.c}x{pair.busy.h}x{pair.busy.w} -> {busy_dir / 'clip.bqc1'}; "
        f"quiet {pair.quiet.t}x{pair.quiet.c}x{pair.quiet.h}x{pair.quiet.w} -> {quiet_dir / 'clip.bqc1'}"
    )
    return 0


def _cmd_kernel(args) -> int:
    fmt = {"json": "json", "pgm": "pgm-heatmap"}[args.format]
    if args.temporal:
        kernel = temporal_highpass_kernel(args.channels, args.stride)
    else:
        kernel = log_kernel(args.sigma, args.k, args.channels, args.norm)
    path = export_kernel(kernel, Path(args.export), fmt)
    print(f"wrote {path}")
    return 0


def _cmd_flops(args) -> int:
    shape = _parse_shape(args.shape)
    params = init_mbpm(args.sigma, args.k, shape[1], args.stride)
    total = count_macs(params, shape)
    print(f"{total / 1e9:.3f} GMACs, {count_params(params)} params")
    return 0


def _cmd_check(args) -> int:
    results = run_check_suites(seed=args.seed)
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
    return 0 if all(r.passed for r in results) else 1


def _cmd_bench(args) -> int:
    shapes = [_parse_shape(s) for s in args.shapes.split(";") if s]
    report = run_bench(shapes, args.repeats, sigma=args.sigma, k=args.k, seed=args.seed)
    for case in report["cases"]:
        shape = "x".join(str(v) for v in case["shape"])
        print(
            f"{shape} k={case['k']}: separable {case['separable']['median_seconds'] * 1e3:.2f} ms, "
            f"direct {case['direct']['median_seconds'] * 1e3:.2f} ms, "
            f"macs {case['macs']['total']:,}, max|diff| {case['max_abs_diff']:.2e}, "
            f"faster: {case['faster']}"
        )
    if args.json:
        Path(args.json).write_text(json.dumps(report, indent=2) + "\n")
        print(f"wrote {args.json}")
    return 0


def _cmd_train_toy(args) -> int:
    dataset = moving_square_dataset(count=args.clips, seed=args.seed)
    params = init_mbpm(args.sigma, args.k, 1, 3, trainable=not args.freeze_mbpm)
    head = init_head(2, 1, seed=args.seed, scale=TOY_DEFAULTS["head_scale"])
    result = train_toy(dataset, params, head, steps=args.steps, lr=args.lr)
    fd_clip = dataset[0][0]
    fd = finite_diff_check(fd_clip, params)
    report = {
        "params": count_params(params),
        "macs": count_macs(params, dataset[0][0].shape),
        "max_rel_err": fd["max_rel_err"],
        "loss_curve": result["loss_curve"],
        "loss_curve_smoothed": result["loss_curve_smoothed"],
        "accuracy": result["accuracy"],
        "steps": result["steps"],
        "lr": result["lr"],
        "seed": args.seed,
    }
    print(
        f"loss {report['loss_curve'][0]:.4f} -> {report['loss_curve'][-1]:.4f}, "
        f"accuracy {report['accuracy']:.3f}, gradient check {fd['max_rel_err']:.2e}"
    )
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
        print(f"wrote {args.report}")
    return 0


def _cmd_graph(args) -> int:
    config = load_bqn_config(Path(args.config))
    graph = build_bqn(config)
    clip = load_raw(Path(args.in_path))
    if clip.t % 3 != 0:
        raise ConfigError(f"clip length {clip.t} is not divisible by 3")
    quiet = min(args.quiet_size, clip.h, clip.w)
    dis = DisentangleConfig(
        sigma=args.sigma,
        k=args.k,
        busy_size=(clip.h, clip.w),
        quiet_size=(quiet, quiet),
        segments=clip.t // 3,
    )
    params = init_mbpm(args.sigma, args.k, clip.c, 3)
    pair = disentangle(clip, dis, params)
    scores = forward(graph, pair)
    doc = {
        "scores": scores.tolist(),
        "classes": config.classes,
        "fusion": config.fusion,
        "seed": config.seed,
        "argmax": int(np.argmax(scores)),
    }
    Path(args.scores).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {args.scores} (argmax class {doc['argmax']})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="busyquiet",
        description="Busy/quiet video disentangling: band-pass motion distillation and analysis tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("disentangle", help="split an image sequence into busy/quiet raw clips")
    p.add_argument("--in", dest="in_dir", required=True, help="directory holding the frame sequence")
    p.add_argument("--out-busy", required=True)
    p.add_argument("--out-quiet", required=True)
    p.add_argument("--sigma", type=float, default=1.1)
    p.add_argument("--k", type=int, default=9)
    p.add_argument("--quiet-size", type=int, default=160)
    p.add_argument("--busy-size", type=int, default=None, help="optionally resize the input first (off by default)")
    p.add_argument("--log-norm", choices=("sum1", "l1", "none"), default="sum1")
    p.add_argument("--format", choices=("ppm", "png"), default="ppm")
    p.add_argument("--channels", type=int, choices=(1, 3), default=3)
    p.add_argument("--emit-quiet-raw", default=None, help="also write the pre-downsample quiet stream")
    p.add_argument("--viz", action="store_true", help="also export per-frame visualizations")
    p.set_defaults(func=_cmd_disentangle)

    p = sub.add_parser("kernel", help="export a filter bank as JSON or a PGM heatmap")
    p.add_argument("--sigma", type=float, default=1.1)
    p.add_argument("--k", type=int, default=9)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--norm", choices=("sum1", "l1", "none"), default="sum1")
    p.add_argument("--export", required=True)
    p.add_argument("--format", choices=("json", "pgm"), default="json")
    p.add_argument("--temporal", action="store_true", help="export the temporal bank instead of the spatial one")
    p.add_argument("--stride", type=int, choices=(1, 3), default=3)
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("flops", help="parameter and MAC counts for a given input shape")
    p.add_argument("--shape", required=True, help="T,C,H,W")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sigma", type=float, default=1.1)
    p.add_argument("--stride", type=int, choices=(1, 3), default=3)
    p.set_defaults(func=_cmd_flops)

    p = sub.add_parser("check", help="run the self-verification suites")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("bench", help="time separable vs direct band-pass evaluation")
    p.add_argument("--shapes", default="6,3,64,64;9,3,96,96", help="semicolon-separated T,C,H,W list")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--sigma", type=float, default=1.1)
    p.add_argument("--k", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", default=None, help="also write the full report as JSON")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("train-toy", help="train the band-pass taps plus a linear head on a synthetic task")
    p.add_argument("--steps", type=int, default=TOY_DEFAULTS["steps"])
    p.add_argument("--lr", type=float, default=TOY_DEFAULTS["lr"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clips", type=int, default=200)
    p.add_argument("--sigma", type=float, default=TOY_DEFAULTS["sigma"])
    p.add_argument("--k", type=int, default=TOY_DEFAULTS["k"])
    p.add_argument("--freeze-mbpm", action="store_true", help="train only the head")
    p.add_argument("--report", default=None, help="write the JSON report here")
    p.set_defaults(func=_cmd_train_toy)

    p = sub.add_parser("graph", help="run the two-pathway network on a raw clip")
    p.add_argument("--config", required=True, help="graph config JSON")
    p.add_argument("--in", dest="in_path", required=True, help="input clip in BQC1 format")
    p.add_argument("--scores", required=True, help="output JSON with class scores")
    p.add_argument("--sigma", type=float, default=1.1)
    p.add_argument("--k", type=int, default=9)
    p.add_argument("--quiet-size", type=int, default=160)
    p.set_defaults(func=_cmd_graph)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _threads_cap()  # validated for interface compatibility; execution is sequential
        return args.func(args)
    except BusyQuietError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
