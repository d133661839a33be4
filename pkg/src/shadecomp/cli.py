"""Command-line interface.

Subcommands: compose (full pipeline), render (one renderer pass), mask
(inference shading mask), gen-scenes, evaluate, study, check-renderer.
Exit codes: 0 success, 1 usage error, 2 data/runtime error.  Every run
prints a reproducibility line with the seed, shading radius, renderer id,
and package version.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .compositor import CompositeInputs, compose_pipeline
from .imaging import read_pfm, write_pfm
from .intrinsics import load_bundle, save_bundle
from .masks import MaskParams, build_inference_shading_mask
from .metrics import StudyRecord, aggregate_reports, binomial_confusion_interval, evaluate_pair
from .render import (
    DEFAULT_SEED,
    AnalyticRenderer,
    ExternalRenderer,
    LightSpec,
    check_renderer_contract,
)
from .scenes import generate_scene, sample_scene, save_scene


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _rgb(text: str) -> tuple[float, float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected r,g,b, got {text!r}")
    return tuple(parts)


def _unit3(text: str) -> tuple[float, float, float]:
    parts = np.asarray([float(v) for v in text.split(",")], dtype=np.float64)
    if parts.size != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    norm = float(np.linalg.norm(parts))
    if norm == 0:
        raise argparse.ArgumentTypeError("direction must be nonzero")
    return tuple(float(v) for v in parts / norm)


def _add_light_flags(parser):
    parser.add_argument(
        "--light-dir",
        type=_unit3,
        default=_unit3("0.3,-0.8,0.2"),
        help="direction toward the light, x,y,z (normalized; y points down)",
    )
    parser.add_argument("--light-intensity", type=_rgb, default=(1.0, 1.0, 1.0))
    parser.add_argument("--ambient", type=_rgb, default=(0.2, 0.2, 0.2))


def _make_renderer(args):
    if args.renderer == "analytic":
        light = LightSpec(
            direction=args.light_dir,
            intensity=args.light_intensity,
            ambient=args.ambient,
        )
        return AnalyticRenderer(light)
    return ExternalRenderer(args.renderer)


def _repro_line(args, renderer_id: str) -> str:
    seed = getattr(args, "seed", DEFAULT_SEED)
    radius = getattr(args, "shading_radius", 1.0)
    return f"run: seed={seed} lambda={radius} renderer={renderer_id} version={__version__}"


def build_parser() -> _Parser:
    parser = _Parser(prog="shadecomp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"shadecomp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compose", help="run the full compositing pipeline")
    p.add_argument("--bg", required=True, help="background bundle directory")
    p.add_argument("--obj", required=True, help="object bundle directory (no shading)")
    p.add_argument("--mask", required=True, help="binary object mask PFM")
    p.add_argument("--out", required=True, help="output composite PFM")
    p.add_argument("--renderer", default="analytic", help="'analytic' or a bridge executable")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--lambda", dest="shading_radius", type=float, default=1.0)
    p.add_argument("--emit-intermediates", action="store_true")
    _add_light_flags(p)

    p = sub.add_parser("render", help="one renderer pass over a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--renderer", default="analytic")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_light_flags(p)

    p = sub.add_parser("mask", help="build the inference shading mask")
    p.add_argument("--bg", required=True, help="background bundle directory")
    p.add_argument("--obj", help="object bundle directory (for aligned composite depth)")
    p.add_argument("--mask", required=True, help="binary object mask PFM")
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="shading_radius", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("gen-scenes", help="generate procedural evaluation scenes")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("evaluate", help="metric suite over paired directories")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True, help="CSV report path")
    p.add_argument("--ppd", type=float, default=67.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("study", help="2AFC confusion-rate interval")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("wald", "wilson"), default="wald")
    p.add_argument("--level", type=float, default=0.95)

    p = sub.add_parser("check-renderer", help="renderer contract conformance suite")
    p.add_argument("--renderer", required=True, help="'analytic' or a bridge executable")
    p.add_argument("--bundle", help="bundle directory (default: a built-in test scene)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_light_flags(p)
    return parser


def _cmd_compose(args) -> int:
    renderer = _make_renderer(args)
    print(_repro_line(args, renderer.renderer_id))
    bg = load_bundle(args.bg)
    obj = load_bundle(args.obj)
    mask = read_pfm(args.mask)
    inputs = CompositeInputs(
        bg=bg,
        obj=obj,
        object_mask=mask,
        params=MaskParams(shading_radius=args.shading_radius, seed=args.seed),
    )
    result = compose_pipeline(inputs, renderer, seed=args.seed, return_intermediates=True)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pfm(out, result.composite)
    print(f"wrote {out}")
    if args.emit_intermediates:
        write_pfm(out.with_name(out.stem + "_ratio.pfm"), result.ratio)
        write_pfm(out.with_name(out.stem + "_shading_mask.pfm"), result.shading_mask)
        icomp_dir = out.parent / (out.stem + "_icomp")
        save_bundle(result.comp_bundle, icomp_dir)
        print(f"wrote intermediates next to {out}")
    return 0


def _cmd_render(args) -> int:
    renderer = _make_renderer(args)
    print(_repro_line(args, renderer.renderer_id))
    bundle = load_bundle(args.bundle)
    image = renderer.render(bundle, seed=args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_pfm(args.out, image)
    print(f"wrote {args.out}")
    return 0


def _cmd_mask(args) -> int:
    print(_repro_line(args, "n/a"))
    bg = load_bundle(args.bg)
    mask = read_pfm(args.mask)
    params = MaskParams(shading_radius=args.shading_radius, seed=args.seed)
    if args.obj:
        from .compositor import align_object_depth

        obj = load_bundle(args.obj)
        aligned = align_object_depth(obj.depth, bg.depth, mask)
        depth = mask * aligned + (1.0 - mask) * bg.depth
    else:
        depth = bg.depth
    shading_mask = build_inference_shading_mask(mask, depth, bg.camera, params)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_pfm(args.out, shading_mask)
    print(f"wrote {args.out}")
    return 0


def _gen_one_scene(task) -> str:
    seed, width, height, out_dir = task
    rng = np.random.default_rng(seed)
    data = generate_scene(sample_scene(rng, width=width, height=height))
    return str(save_scene(data, out_dir))


def _cmd_gen_scenes(args) -> int:
    print(_repro_line(args, "analytic"))
    out_root = Path(args.out)
    tasks = [
        (args.seed + i, args.width, args.height, out_root / f"scene_{i:04d}")
        for i in range(args.count)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for path in pool.map(_gen_one_scene, tasks):
                print(f"wrote {path}")
    else:
        for task in tasks:
            print(f"wrote {_gen_one_scene(task)}")
    return 0


def _eval_one_pair(task):
    name, pred_path, ref_path = task
    return evaluate_pair(read_pfm(pred_path), read_pfm(ref_path), name=name)


def _cmd_evaluate(args) -> int:
    from .reporting import render_metric_figures, write_metrics_csv

    print(_repro_line(args, "n/a"))
    pred_dir, ref_dir = Path(args.pred), Path(args.ref)
    names = sorted(
        p.name for p in pred_dir.glob("*.pfm") if (ref_dir / p.name).is_file()
    )
    if not names:
        print(f"no paired .pfm files between {pred_dir} and {ref_dir}", file=sys.stderr)
        return 2
    tasks = [(n, pred_dir / n, ref_dir / n) for n in names]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_eval_one_pair, tasks))
    else:
        reports = [_eval_one_pair(t) for t in tasks]
    aggregate = aggregate_reports(reports)
    csv_path = write_metrics_csv(reports, aggregate, args.out)
    print(f"wrote {csv_path} ({len(reports)} pairs)")
    for key, value in aggregate.values().items():
        print(f"  mean {key}: {value:.6g}")
    if not args.no_figures:
        for fig_path in render_metric_figures(reports, aggregate, csv_path):
            print(f"wrote {fig_path}")
    return 0


def _cmd_study(args) -> int:
    print(_repro_line(args, "n/a"))
    record = StudyRecord(n=args.n, k=args.k)
    estimate, half = binomial_confusion_interval(record, level=args.level, method=args.method)
    print(
        f"confusion rate: {100 * estimate:.1f} +/- {100 * half:.1f} % "
        f"({args.method}, {100 * args.level:.0f}% level, n={args.n})"
    )
    return 0


def _cmd_check_renderer(args) -> int:
    renderer = _make_renderer(args)
    print(_repro_line(args, renderer.renderer_id))
    if args.bundle:
        bundle = load_bundle(args.bundle)
    else:
        rng = np.random.default_rng(args.seed)
        data = generate_scene(sample_scene(rng, width=96, height=96))
        h, w = data.bundle_bg.shape
        mask = np.ones((h, w, 1), dtype=np.float32)
        mask[h // 3 : 2 * h // 3, w // 3 : 2 * w // 3] = 0.0
        bundle = data.bundle_bg.with_shading_mask(mask)
    checks = check_renderer_contract(renderer, bundle, seed=args.seed)
    failed = 0
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.detail}")
        failed += 0 if check.passed else 1
    if failed:
        print(f"{failed} contract check(s) failed", file=sys.stderr)
        return 2
    print("renderer contract: all checks passed")
    return 0


_HANDLERS = {
    "compose": _cmd_compose,
    "render": _cmd_render,
    "mask": _cmd_mask,
    "gen-scenes": _cmd_gen_scenes,
    "evaluate": _cmd_evaluate,
    "study": _cmd_study,
    "check-renderer": _cmd_check_renderer,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _HANDLERS[args.command](args)
    except BrokenPipeError:
        return 0
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
