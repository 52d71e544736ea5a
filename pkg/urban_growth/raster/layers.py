"""
Grid data model.

Layers are immutable values: the wrapped numpy array is copied on construction
and flagged read-only, so layers can be shared freely between workers.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from urban_growth.core.errors import ArgumentError, LayerValidationError


@dataclass(frozen=True)
class GridDims:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ArgumentError(f"grid dims must be positive, got {self.rows}x{self.cols}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def __str__(self) -> str:
        return f"{self.rows}x{self.cols}"


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    if out.ndim != 2:
        raise ArgumentError(f"layer cells must be two-dimensional, got shape {out.shape}")
    GridDims(*out.shape)
    out.flags.writeable = False
    return out


class _Layer:
    cells: np.ndarray

    @property
    def dims(self) -> GridDims:
        return GridDims(*self.cells.shape)

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and np.array_equal(self.cells, other.cells)

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.cells.shape, self.cells.tobytes()))


@dataclass(frozen=True, eq=False)
class BinaryLayer(_Layer):
    """Per-cell boolean raster (urban, road, excluded or patch mask)."""
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.dtype != bool and not np.isin(cells, (0, 1)).all():
            raise ArgumentError("binary layer values must be 0 or 1")
        object.__setattr__(self, "cells", _frozen(cells, bool))

    @classmethod
    def zeros(cls, dims: GridDims) -> "BinaryLayer":
        return cls(np.zeros(dims.shape, dtype=bool))

    def count(self) -> int:
        return int(np.count_nonzero(self.cells))

    def __or__(self, other: "BinaryLayer") -> "BinaryLayer":
        return BinaryLayer(self.cells | other.cells)

    def __and__(self, other: "BinaryLayer") -> "BinaryLayer":
        return BinaryLayer(self.cells & other.cells)

    def __sub__(self, other: "BinaryLayer") -> "BinaryLayer":
        return BinaryLayer(self.cells & ~other.cells)

    def issubset(self, other: "BinaryLayer") -> bool:
        return not np.any(self.cells & ~other.cells)


@dataclass(frozen=True, eq=False)
class SlopeLayer(_Layer):
    """Integer percent slope, 0 flat to 100 vertical."""
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.size and (cells.min() < 0 or cells.max() > 100):
            bad = np.argwhere((cells < 0) | (cells > 100))[0]
            raise LayerValidationError(
                f"slope value {cells[tuple(bad)]} outside [0,100]",
                layer="slope",
                cell=(int(bad[0]), int(bad[1])),
            )
        if np.issubdtype(cells.dtype, np.floating) and not np.array_equal(cells, np.round(cells)):
            raise ArgumentError("slope values must be integers")
        object.__setattr__(self, "cells", _frozen(cells, np.int16))

    @classmethod
    def flat(cls, dims: GridDims) -> "SlopeLayer":
        return cls(np.zeros(dims.shape, dtype=np.int16))


@dataclass(frozen=True, eq=False)
class GrayLayer(_Layer):
    """8-bit grayscale raster (hillshade, display only)."""
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.size and (cells.min() < 0 or cells.max() > 255):
            raise ArgumentError("gray values must lie in [0,255]")
        object.__setattr__(self, "cells", _frozen(cells, np.uint8))


@dataclass(frozen=True, eq=False)
class ProbabilityMap(_Layer):
    """Per-cell fraction of Monte Carlo runs in which the cell is urban."""
    cells: np.ndarray
    year: int = 0

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if cells.size and (cells.min() < 0.0 or cells.max() > 1.0):
            raise ArgumentError("probabilities must lie in [0,1]")
        object.__setattr__(self, "cells", _frozen(cells, np.float64))

    def __eq__(self, other) -> bool:
        return super().__eq__(other) and self.year == other.year

    def __hash__(self) -> int:
        return hash((super().__hash__(), self.year))

    def to_gray(self) -> GrayLayer:
        """Scale to 0..255 with probability 1.0 mapping to 255."""
        return GrayLayer(np.floor(self.cells * 255.0 + 0.5).astype(np.uint8))


Layer = Union[BinaryLayer, SlopeLayer, GrayLayer, ProbabilityMap]


@dataclass(frozen=True, eq=False)
class PatchSet:
    """8-connected components: labels (0 = background) and cell counts per label."""
    labels: np.ndarray
    sizes: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int32, copy=True)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def count(self) -> int:
        return len(self.sizes)

    def mask(self, ids) -> BinaryLayer:
        return BinaryLayer(np.isin(self.labels, list(ids)))

    def largest(self) -> Optional[int]:
        """Label of the largest patch; ties go to the first discovered."""
        if not self.sizes:
            return None
        return min(self.sizes, key=lambda label: (-self.sizes[label], label))


@dataclass(frozen=True)
class LayerStack:
    """The historical dataset: dated urban and road layers plus static layers."""
    urban_series: List[Tuple[int, BinaryLayer]]
    road_series: List[Tuple[int, BinaryLayer]]
    slope: SlopeLayer
    excluded: BinaryLayer
    hillshade: Optional[GrayLayer] = None

    @property
    def dims(self) -> GridDims:
        return self.slope.dims

    @property
    def years(self) -> List[int]:
        return [year for year, _ in self.urban_series]

    def roads_for(self, year: int) -> BinaryLayer:
        """Most recent road layer dated at or before ``year`` (earliest if none)."""
        chosen = self.road_series[0][1]
        for road_year, layer in self.road_series:
            if road_year <= year:
                chosen = layer
        return chosen

    def problems(self, min_urban_years: int = 4, min_road_years: int = 2) -> List[LayerValidationError]:
        """Every invariant violation, in a stable order."""
        found: List[LayerValidationError] = []
        dims = self.dims

        if len(self.urban_series) < min_urban_years:
            found.append(LayerValidationError(
                f"calibration needs historic urban extent for at least four time periods "
                f"(minimum {min_urban_years}), got {len(self.urban_series)}",
                layer="urban",
            ))
        if len(self.road_series) < min_road_years:
            found.append(LayerValidationError(
                f"need road layers for at least {min_road_years} time periods, got {len(self.road_series)}",
                layer="roads",
            ))

        for name, series in (("urban", self.urban_series), ("roads", self.road_series)):
            years = [year for year, _ in series]
            for earlier, later in zip(years, years[1:]):
                if later <= earlier:
                    found.append(LayerValidationError(
                        f"years must be strictly increasing ({earlier} then {later})", layer=name, year=later,
                    ))
            for year, layer in series:
                if layer.dims != dims:
                    found.append(LayerValidationError(
                        f"dims {layer.dims} differ from slope dims {dims}", layer=name, year=year,
                    ))

        static = [("excluded", self.excluded)]
        if self.hillshade is not None:
            static.append(("hillshade", self.hillshade))
        for name, layer in static:
            if layer.dims != dims:
                found.append(LayerValidationError(f"dims {layer.dims} differ from slope dims {dims}", layer=name))

        if self.excluded.dims == dims:
            for year, layer in self.urban_series:
                if layer.dims != dims:
                    continue
                overlap = np.argwhere(layer.cells & self.excluded.cells)
                if len(overlap):
                    r, c = (int(v) for v in overlap[0])
                    found.append(LayerValidationError(
                        f"{len(overlap)} urban cell(s) lie in the excluded layer",
                        layer="urban", year=year, cell=(r, c),
                    ))
        return found

    def validate(self, **kwargs) -> None:
        problems = self.problems(**kwargs)
        if problems:
            raise problems[0]
