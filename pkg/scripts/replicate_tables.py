#!/usr/bin/env python3
"""Rerun the top-50 comparison tables against user-supplied dataset bundles.

Usage:
    python scripts/replicate_tables.py --bundle data/occupations [--out report.json]

The bundles are not shipped with this repository. When the bundle
directory is missing or incomplete, this prints acquisition instructions
and exits 0 (replication is optional, not a CI gate).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from divsum import replicate, runner


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--bundle", required=True, help="bundle directory (see module docs)")
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.33)
    p.add_argument("--out", help="write the JSON report here")
    args = p.parse_args(argv)

    if replicate.bundle_paths(args.bundle) is None:
        sys.stdout.write(replicate.ACQUISITION_NOTE.format(path=args.bundle))
        return 0

    report = replicate.replicate_tables(
        args.bundle, m=args.m, alpha=args.alpha, beta=args.beta
    )
    data = runner.report_bytes(report)
    if args.out:
        Path(args.out).write_bytes(data)
        sys.stdout.write(f"wrote {args.out}\n")
    else:
        sys.stdout.write(data.decode("utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
