"""Command-line wrapper: weldbridge --model M --images DIR --out FILE."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bridge import BridgeConfig, infer_dir


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weldbridge",
        description="Run a trained detector over an image directory and emit a detections file.",
    )
    parser.add_argument("--model", required=True, help="stub-detector .json or SavedModel dir")
    parser.add_argument("--images", required=True, help="directory of PNG images")
    parser.add_argument("--out", required=True, help="output detections file (NDJSON)")
    parser.add_argument(
        "--score-floor", type=float, default=0.0, help="drop detections below this score"
    )
    parser.add_argument(
        "--resize", default="300x300", help="model input size as WxH (default 300x300)"
    )
    parser.add_argument("--batch-size", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        width, _, height = args.resize.partition("x")
        cfg = BridgeConfig(
            model=Path(args.model),
            images=Path(args.images),
            out=Path(args.out),
            score_floor=args.score_floor,
            resize=(int(width), int(height)),
            batch_size=args.batch_size,
        )
        out = infer_dir(cfg)
        logging.getLogger("weldbridge").info("wrote %s", out)
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
