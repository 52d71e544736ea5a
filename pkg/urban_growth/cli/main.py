"""
Urban Growth - command-line front end.

Run with: urban-growth <command> [options]
Commands: validate, calibrate, forecast, metrics, convert

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 runtime failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from urban_growth import __version__
from urban_growth.cli.commands import calibrate, convert, forecast, metrics, validate
from urban_growth.core.errors import (
    ArgumentError,
    ConfigError,
    LayerValidationError,
    UrbanGrowthError,
)
from urban_growth.core.logging import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="urban-growth",
        description="SLEUTH-style urban growth simulation, calibration and scenario forecasting.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--log-dir", default=None, help="also write log files to this directory")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in (validate, calibrate, forecast, metrics, convert):
        module.add_parser(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(debug=True if args.verbose else None, log_dir=args.log_dir)

    try:
        return args.handler(args)
    except (LayerValidationError, ConfigError) as e:
        logger.error(f"❌ {e}")
        return EXIT_INVALID
    except ArgumentError as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    except (UrbanGrowthError, OSError) as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
