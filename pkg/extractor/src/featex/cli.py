"""Command-line front end: featex IMAGES_DIR OUT_CSV [--pca-dim N]."""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractionError, extract


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="featex",
        description="Embed a directory of images as a divsum embedding CSV.",
    )
    parser.add_argument("images_dir", help="directory scanned recursively for images")
    parser.add_argument("out_path", help="output embedding CSV path")
    parser.add_argument(
        "--pca-dim",
        type=int,
        default=256,
        help="output dimensionality after PCA (default 256)",
    )
    args = parser.parse_args(argv)
    try:
        out = extract(args.images_dir, args.out_path, pca_dim=args.pca_dim)
    except ExtractionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
