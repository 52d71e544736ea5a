"""
metrics - score modeled layers against actual layers, CSV on stdout.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Tuple

import pandas as pd

from urban_growth.core.errors import ArgumentError
from urban_growth.core.schemas import METRIC_NAMES
from urban_growth.raster.io import read_grid
from urban_growth.raster.layers import BinaryLayer, SlopeLayer
from urban_growth.services.ensemble import EnsembleResult
from urban_growth.services.metrics import ControlSeries, lee_sallee, metric_vector
from urban_growth.services.reports import FLOAT_FORMAT

logger = logging.getLogger(__name__)


def _dated(value: str) -> Tuple[int, Path]:
    year, sep, path = value.partition(":")
    if sep and year.isdigit():
        return int(year), Path(path)
    return 0, Path(value)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(
        "metrics",
        help="fit metrics of modeled vs actual layers",
        description=(
            "With one modeled and one actual layer, prints leesallee. With three or more "
            "YEAR:PATH pairs (first pair = start year), prints the full metric vector."
        ),
    )
    parser.add_argument("--modeled", nargs="+", required=True, type=_dated, help="modeled layers or probability maps")
    parser.add_argument("--actual", nargs="+", required=True, type=_dated, help="actual urban layers")
    parser.add_argument("--slope", type=Path, default=None, help="slope layer (default: flat)")
    parser.add_argument("--excluded", type=Path, default=None, help="excluded layer (default: none)")
    parser.set_defaults(handler=run)


def _read_pairs(modeled, actual) -> Tuple[List[Tuple[int, BinaryLayer]], List[Tuple[int, BinaryLayer]]]:
    if len(modeled) != len(actual):
        raise ArgumentError(f"{len(modeled)} modeled layer(s) but {len(actual)} actual layer(s)")
    modeled_layers, actual_layers = [], []
    for (m_year, m_path), (a_year, a_path) in zip(modeled, actual):
        if m_year != a_year:
            raise ArgumentError(f"years differ: {m_path} is {m_year}, {a_path} is {a_year}")
        prob = read_grid(m_path, "probability")
        truth = read_grid(a_path, "binary")
        if prob.dims != truth.dims:
            raise ArgumentError(f"dims differ: {m_path} is {prob.dims}, {a_path} is {truth.dims}")
        modeled_layers.append((m_year, BinaryLayer(prob.cells >= 0.5)))
        actual_layers.append((a_year, truth))
    return modeled_layers, actual_layers


def run(args: argparse.Namespace) -> int:
    modeled, actual = _read_pairs(args.modeled, args.actual)

    if len(modeled) == 1:
        pd.DataFrame({"leesallee": [lee_sallee(modeled[0][1], actual[0][1])]}).to_csv(
            sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
        )
        return 0
    if len(modeled) < 3:
        raise ArgumentError("the metric vector needs a start year plus at least two control years")

    dims = actual[0][1].dims
    slope = read_grid(args.slope, "slope") if args.slope else SlopeLayer.flat(dims)
    excluded = read_grid(args.excluded, "binary") if args.excluded else BinaryLayer.zeros(dims)
    for name, path, layer in (("slope", args.slope, slope), ("excluded", args.excluded, excluded)):
        if layer.dims != dims:
            raise ArgumentError(f"dims differ: {name} {path} is {layer.dims}, layers are {dims}")

    controls = ControlSeries.from_layers(actual, slope, excluded)
    ensemble = EnsembleResult.from_layers(modeled, slope, excluded)
    vector = metric_vector(ensemble, controls, actual[-1][1])
    pd.DataFrame([vector.as_tuple()], columns=list(METRIC_NAMES)).to_csv(
        sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )
    return 0
