"""
Dataset loading - reads the configured layers into a LayerStack.
"""

import logging
from typing import List, Optional, Tuple

from urban_growth.core.errors import UrbanGrowthError
from urban_growth.core.project import DatasetConfig
from urban_growth.raster.io import read_grid
from urban_growth.raster.layers import BinaryLayer, LayerStack

logger = logging.getLogger(__name__)


def read_stack(dataset: DatasetConfig) -> Tuple[Optional[LayerStack], List[UrbanGrowthError]]:
    """
    Read every layer, collecting per-file failures instead of stopping at the first.

    Returns the stack (or None when a layer could not be read) and the failures.
    """
    errors: List[UrbanGrowthError] = []

    def _read(path, kind):
        try:
            return read_grid(path, kind)
        except UrbanGrowthError as e:
            errors.append(e)
            return None

    urban = [(year, _read(path, "binary")) for year, path in dataset.urban]
    roads = [(year, _read(path, "binary")) for year, path in dataset.roads]
    slope = _read(dataset.slope, "slope")
    excluded = _read(dataset.excluded, "binary") if dataset.excluded else None
    hillshade = _read(dataset.hillshade, "gray") if dataset.hillshade else None

    if errors:
        return None, errors
    if excluded is None:
        excluded = BinaryLayer.zeros(slope.dims)
    stack = LayerStack(
        urban_series=urban,
        road_series=roads,
        slope=slope,
        excluded=excluded,
        hillshade=hillshade,
    )
    return stack, []


def load_stack(dataset: DatasetConfig, validate: bool = True) -> LayerStack:
    """Read and (by default) validate the dataset, raising the first problem."""
    stack, errors = read_stack(dataset)
    if errors:
        raise errors[0]
    if validate:
        stack.validate()
    logger.info(f"Dataset loaded: {stack.dims}, urban years {stack.years}")
    return stack
