"""Command-line interface.

    stereofuse run --calib calib.json --manifest manifest.json --out results/
    stereofuse synth --scene scene.json --out dataset/
    stereofuse disparity --calib calib.json --left L.png --right R.png --out d.pgm
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .calib import parse_calibration, rectify_image
from .disparity import DisparityParams, compute_disparity_map, to_grayscale
from .imgio import load_image, write_pgm16
from .pipeline import PipelineConfig, build_rectification_context, run_sequence
from .synth import load_scene_file, write_scene_dataset


def _parse_block(value: str) -> tuple[int, int]:
    try:
        w_str, h_str = value.lower().split("x")
        return int(w_str), int(h_str)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected WxH (e.g. 5x5), got {value!r}"
        ) from None


def _add_matcher_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--block", type=_parse_block, default=(5, 5), metavar="WxH",
                        help="matching block size (default 5x5)")
    parser.add_argument("--block-step", type=int, default=None, metavar="N",
                        help="center stride; default = block width, 1 = dense")
    parser.add_argument("--max-disparity", type=int, default=64, metavar="D",
                        help="search range upper bound (default 64)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereofuse",
        description="Stereo distance estimation with detection fusion and a bird's-eye map",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="process a frame sequence")
    run.add_argument("--calib", required=True, help="calibration JSON")
    run.add_argument("--manifest", required=True, help="frame manifest JSON")
    run.add_argument("--out", default="stereofuse_out", help="output directory")
    run.add_argument("--threshold", type=float, default=0.8,
                     help="detection confidence threshold (default 0.8)")
    run.add_argument("--labels", default=None,
                     help="comma-separated labels to fuse (default: all)")
    _add_matcher_args(run)
    run.add_argument("--min-valid", type=int, default=25, metavar="N",
                     help="minimum valid pixels per box (default 25)")
    run.add_argument("--side-range", type=float, default=2.5, metavar="M",
                     help="LDM side view range in meters (default 2.5)")
    run.add_argument("--front-range", type=float, default=6.0, metavar="M",
                     help="LDM front view range in meters (default 6.0)")
    run.add_argument("--jobs", type=int, default=1, metavar="N",
                     help="frames processed concurrently (default 1)")
    run.set_defaults(func=_cmd_run)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--scene", required=True, help="scene JSON")
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(func=_cmd_synth)

    disp = sub.add_parser("disparity", help="compute one disparity map")
    disp.add_argument("--calib", required=True, help="calibration JSON")
    disp.add_argument("--left", required=True, help="left image")
    disp.add_argument("--right", required=True, help="right image")
    disp.add_argument("--out", required=True, help="output 16-bit PGM path")
    _add_matcher_args(disp)
    disp.set_defaults(func=_cmd_disparity)

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    rig = parse_calibration(Path(args.calib).read_text())
    labels = tuple(s for s in args.labels.split(",") if s) if args.labels else None
    config = PipelineConfig(
        threshold=args.threshold,
        labels=labels,
        block_w=args.block[0],
        block_h=args.block[1],
        block_step=args.block_step,
        max_disparity=args.max_disparity,
        min_valid=args.min_valid,
        side_range=args.side_range,
        front_range=args.front_range,
        jobs=args.jobs,
    )
    return run_sequence(rig, args.manifest, args.out, config)


def _cmd_synth(args: argparse.Namespace) -> int:
    calib_doc, specs = load_scene_file(Path(args.scene).read_text())
    manifest = write_scene_dataset(calib_doc, specs, args.out)
    print(f"wrote {len(specs)} frame(s); manifest at {manifest}")
    return 0


def _cmd_disparity(args: argparse.Namespace) -> int:
    rig = parse_calibration(Path(args.calib).read_text())
    left = load_image(args.left)
    right = load_image(args.right)
    ctx = build_rectification_context(rig, (left.shape[1], left.shape[0]))
    if ctx.map_left is not None:
        left = rectify_image(left, ctx.map_left)
        right = rectify_image(right, ctx.map_right)
    left_gray = to_grayscale(left) if left.ndim == 3 else left
    right_gray = to_grayscale(right) if right.ndim == 3 else right
    params = DisparityParams(
        block_w=args.block[0],
        block_h=args.block[1],
        max_disparity=args.max_disparity,
        block_step=args.block_step,
    )
    dmap = compute_disparity_map(left_gray, right_gray, params)
    write_pgm16(args.out, dmap)
    print(f"wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"stereofuse: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
