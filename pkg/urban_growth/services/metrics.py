"""
Goodness-of-fit metrics comparing simulated growth with historical control years.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from urban_growth.core.errors import ArgumentError
from urban_growth.core.schemas import MetricVector
from urban_growth.raster.layers import BinaryLayer, LayerStack, SlopeLayer
from urban_growth.services.ensemble import EnsembleResult
from urban_growth.services.engine import summarize_urban

logger = logging.getLogger(__name__)

# Fit score -> GrowthCycleStats field whose per-year series it regresses
SERIES_FIELDS: Dict[str, str] = {
    "pop": "area",
    "edges": "edges",
    "clusters": "num_clusters",
    "cluster_size": "mean_cluster_size",
    "slope": "slope",
    "pct_urban": "pct_urban",
    "xmean": "xmean",
    "ymean": "ymean",
    "rad": "rad",
}


@dataclass(frozen=True)
class ControlSeries:
    """Observed statistics for each control year."""
    years: List[int]
    values: Dict[str, np.ndarray]

    def __post_init__(self):
        if len(self.years) < 2:
            raise ArgumentError(f"need at least 2 control years, got {len(self.years)}")
        if any(b <= a for a, b in zip(self.years, self.years[1:])):
            raise ArgumentError("control years must be strictly increasing")

    @property
    def final_area(self) -> float:
        return float(self.values["area"][-1])

    @classmethod
    def from_stack(cls, stack: LayerStack) -> "ControlSeries":
        return cls.from_layers(stack.urban_series, stack.slope, stack.excluded)

    @classmethod
    def from_layers(
        cls,
        series: Sequence[Tuple[int, BinaryLayer]],
        slope: SlopeLayer,
        excluded: BinaryLayer,
    ) -> "ControlSeries":
        """Every urban year after the first (the simulation seed) is a control year."""
        controls = list(series[1:])
        summaries = [summarize_urban(layer, slope, excluded) for _, layer in controls]
        fields = sorted(set(SERIES_FIELDS.values()))
        return cls(
            years=[year for year, _ in controls],
            values={f: np.array([s[f] for s in summaries], dtype=np.float64) for f in fields},
        )


def r2(actual: Sequence[float], modeled: Sequence[float]) -> float:
    """Coefficient of determination of an OLS fit of modeled on actual; 0 for constant series."""
    actual = np.asarray(actual, dtype=np.float64)
    modeled = np.asarray(modeled, dtype=np.float64)
    if actual.shape != modeled.shape:
        raise ArgumentError(f"series lengths differ ({actual.size} vs {modeled.size})")
    if actual.size < 2:
        raise ArgumentError("r2 needs at least two points")
    if np.ptp(actual) == 0 or np.ptp(modeled) == 0:
        return 0.0

    da = actual - actual.mean()
    dm = modeled - modeled.mean()
    value = float(np.dot(da, dm) ** 2 / (np.dot(da, da) * np.dot(dm, dm)))
    return min(1.0, max(0.0, value))


def lee_sallee(modeled: BinaryLayer, actual: BinaryLayer) -> float:
    """Intersection over union of two extents; two empty extents match perfectly."""
    if modeled.dims != actual.dims:
        raise ArgumentError(f"dims differ ({modeled.dims} vs {actual.dims})")
    union = np.count_nonzero(modeled.cells | actual.cells)
    if union == 0:
        return 1.0
    return float(np.count_nonzero(modeled.cells & actual.cells)) / float(union)


def compare_metric(modeled_final_area: float, actual_final_area: float) -> float:
    """Ratio of the smaller to the larger final urban area."""
    if actual_final_area <= 0:
        raise ArgumentError(f"actual final area must be positive, got {actual_final_area}")
    if modeled_final_area <= 0:
        return 0.0
    return min(modeled_final_area, actual_final_area) / max(modeled_final_area, actual_final_area)


def metric_vector(
    ensemble: EnsembleResult,
    controls: ControlSeries,
    final_actual: BinaryLayer,
    threshold: float = 0.5,
) -> MetricVector:
    """Score an ensemble against the control years; leesallee uses the stop-year extent."""
    indices = [ensemble.index_of(year) for year in controls.years]
    scores = {
        name: r2(controls.values[field], [getattr(ensemble.mean_stats[i], field) for i in indices])
        for name, field in SERIES_FIELDS.items()
    }
    stop_year = controls.years[-1]
    scores["leesallee"] = lee_sallee(ensemble.extent(stop_year, threshold), final_actual)
    scores["compare"] = compare_metric(ensemble.stats_for(stop_year).area, controls.final_area)
    return MetricVector(**scores)
