"""
convert - translate layers between ESRI ASCII grid and PGM.
"""

import argparse
import logging
from pathlib import Path

from urban_growth.core.errors import ArgumentError
from urban_growth.raster.io import read_grid, write_grid

logger = logging.getLogger(__name__)

_BY_SUFFIX = {".pgm": "pgm", ".asc": "ascii", ".txt": "ascii"}


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("convert", help="convert a layer between ASCII grid and PGM")
    parser.add_argument("source", type=Path)
    parser.add_argument("target", type=Path)
    parser.add_argument(
        "--kind",
        choices=("binary", "slope", "gray", "probability"),
        default="binary",
        help="how to interpret the source values (default: binary)",
    )
    parser.add_argument("--to", choices=("ascii", "pgm"), default=None, help="target format (default: from suffix)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    fmt = args.to or _BY_SUFFIX.get(args.target.suffix.lower())
    if fmt is None:
        raise ArgumentError(f"cannot infer the format of {args.target}; pass --to")
    layer = read_grid(args.source, args.kind)
    write_grid(layer, args.target, fmt)
    logger.info(f"✅ {args.source} -> {args.target} ({args.kind}, {fmt})")
    return 0
