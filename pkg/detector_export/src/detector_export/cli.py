"""Command-line detector exporter.

    detector-export --model skimage-lbp-face --images "frames/left_*.png" --out dets/
"""
from __future__ import annotations

import argparse
import glob
import sys

from .backends import CASCADE_MODEL_ID, ModelLoadError
from .export import ExportConfig, export_detections, write_documents


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="detector-export",
        description="Run a pretrained 2D detector over images and write detection documents",
    )
    parser.add_argument("--model", default=CASCADE_MODEL_ID,
                        help=f"model id (default {CASCADE_MODEL_ID}; or torchvision:<name>)")
    parser.add_argument("--images", required=True,
                        help="image path glob, e.g. 'frames/left_*.png'")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--score-floor", type=float, default=0.0,
                        help="drop detections below this raw score (default 0.0)")
    args = parser.parse_args(argv)

    paths = sorted(glob.glob(args.images))
    if not paths:
        print(f"detector-export: no images match {args.images!r}", file=sys.stderr)
        return 2

    cfg = ExportConfig(model=args.model, score_floor=args.score_floor)
    try:
        items = export_detections(paths, cfg)
    except ModelLoadError as exc:
        print(f"detector-export: model load failure: {exc}", file=sys.stderr)
        return 2

    write_documents(items, args.out)
    failed = 0
    for item in items:
        if item.ok:
            count = len(item.document["detections"])
            print(f"{item.path}: {count} detection(s)")
        else:
            failed += 1
            print(f"{item.path}: ERROR {item.error}", file=sys.stderr)
    if failed:
        print(f"detector-export: {failed}/{len(items)} file(s) failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
