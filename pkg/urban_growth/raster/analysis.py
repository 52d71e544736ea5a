"""
Raster analysis primitives: downsampling, patches, buffers, edges, centroids.
"""

import math
from typing import NamedTuple, TypeVar

import numpy as np
from scipy import ndimage

from urban_growth.core.errors import ArgumentError, DomainError
from urban_growth.raster.layers import BinaryLayer, GrayLayer, PatchSet, ProbabilityMap, SlopeLayer

MOORE = np.ones((3, 3), dtype=bool)
_MOORE_COUNT = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], dtype=np.int16)

L = TypeVar("L", BinaryLayer, SlopeLayer, GrayLayer, ProbabilityMap)


def downsample(layer: L, factor: int) -> L:
    """
    Coarsen by ``factor`` in both directions; edge blocks may be partial.

    Binary cells are set when any covered cell is set; other layers take the
    mean of the covered cells (rounded to the nearest integer for integer layers).
    """
    if factor < 1:
        raise ArgumentError(f"downsample factor must be >= 1, got {factor}")
    if factor == 1:
        return layer

    rows, cols = layer.cells.shape
    row_starts = np.arange(0, rows, factor)
    col_starts = np.arange(0, cols, factor)
    values = layer.cells.astype(np.float64)
    sums = np.add.reduceat(np.add.reduceat(values, row_starts, axis=0), col_starts, axis=1)

    if isinstance(layer, BinaryLayer):
        return BinaryLayer(sums > 0)

    counts = np.outer(np.diff(np.append(row_starts, rows)), np.diff(np.append(col_starts, cols)))
    means = sums / counts
    if isinstance(layer, ProbabilityMap):
        return ProbabilityMap(means, year=layer.year)
    return type(layer)(np.floor(means + 0.5).astype(layer.cells.dtype))


def connected_components(layer: BinaryLayer) -> PatchSet:
    """8-connected patches labelled 1..n in row-major discovery order."""
    labels, count = ndimage.label(layer.cells, structure=MOORE)
    sizes = np.bincount(labels.ravel(), minlength=count + 1)
    return PatchSet(labels=labels, sizes={label: int(sizes[label]) for label in range(1, count + 1)})


def dilate(layer: BinaryLayer, radius: int) -> BinaryLayer:
    """Set every cell within Chebyshev distance ``radius`` of a set cell."""
    if radius < 0:
        raise ArgumentError(f"dilation radius must be >= 0, got {radius}")
    if radius == 0:
        return layer
    grown = ndimage.maximum_filter(
        layer.cells.astype(np.uint8), size=2 * radius + 1, mode="constant", cval=0
    )
    return BinaryLayer(grown > 0)


def fill_holes(layer: BinaryLayer) -> BinaryLayer:
    """Set every unset cell that is not 4-connected to the grid border."""
    return BinaryLayer(ndimage.binary_fill_holes(layer.cells))


def moore_neighbor_count(cells: np.ndarray) -> np.ndarray:
    """Number of set cells among the 8 neighbours; off-grid counts as unset."""
    return ndimage.convolve(cells.astype(np.int16), _MOORE_COUNT, mode="constant", cval=0)


def edge_pixel_count(layer: BinaryLayer) -> int:
    """Set cells with at least one 4-neighbour that is unset or off-grid."""
    cells = layer.cells
    padded = np.pad(cells, 1, mode="constant", constant_values=False)
    interior = (
        cells
        & padded[:-2, 1:-1]
        & padded[2:, 1:-1]
        & padded[1:-1, :-2]
        & padded[1:-1, 2:]
    )
    return int(np.count_nonzero(cells)) - int(np.count_nonzero(interior))


class CentroidStats(NamedTuple):
    xmean: float
    ymean: float
    std_x: float
    std_y: float
    rad: float


def centroid_stats(layer: BinaryLayer) -> CentroidStats:
    """Mean column/row of set cells, population std devs and their radius."""
    rows, cols = np.nonzero(layer.cells)
    if rows.size == 0:
        raise DomainError("centroid of an empty layer is undefined")
    std_x = float(np.std(cols))
    std_y = float(np.std(rows))
    return CentroidStats(
        xmean=float(np.mean(cols)),
        ymean=float(np.mean(rows)),
        std_x=std_x,
        std_y=std_y,
        rad=math.sqrt(std_x * std_x + std_y * std_y),
    )
