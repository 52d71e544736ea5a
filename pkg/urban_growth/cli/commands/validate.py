"""
validate - load every layer and check the dataset invariants.
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from urban_growth.core.errors import ConfigError
from urban_growth.core.project import load_project
from urban_growth.services.dataset import read_stack

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="check the configured dataset")
    parser.add_argument("config", type=Path, help="project INI file")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = load_project(args.config, check_files=False)
    missing = [f"{name}: file not found ({path})" for name, path in config.dataset.paths() if not path.is_file()]
    if missing:
        for line in missing:
            print(f"VIOLATION {line}")
        raise ConfigError(f"{len(missing)} layer file(s) missing", "dataset")

    stack, errors = read_stack(config.dataset)
    if errors:
        for error in errors:
            print(f"VIOLATION {error}")
        return 1

    print(f"grid {stack.dims}")
    print("layer,year,rows,cols,cells_set")
    for year, layer in stack.urban_series:
        print(f"urban,{year},{layer.dims.rows},{layer.dims.cols},{layer.count()}")
    for year, layer in stack.road_series:
        print(f"roads,{year},{layer.dims.rows},{layer.dims.cols},{layer.count()}")
    print(f"slope,,{stack.slope.dims.rows},{stack.slope.dims.cols},")
    print(f"excluded,,{stack.excluded.dims.rows},{stack.excluded.dims.cols},{stack.excluded.count()}")
    if stack.hillshade is not None:
        print(f"hillshade,,{stack.hillshade.dims.rows},{stack.hillshade.dims.cols},")

    fraction = float(np.count_nonzero(stack.excluded.cells)) / stack.excluded.cells.size
    print(f"exclusion_fraction {fraction:.6f}")

    problems = stack.problems()
    for problem in problems:
        print(f"VIOLATION {problem}")
    if problems:
        logger.error(f"❌ {len(problems)} violation(s) in {args.config}")
        return 1
    logger.info(f"✅ {args.config} is valid")
    return 0
