"""
Exclusion-layer scenarios and forecasting.

Policies:
- baseline: only the dataset exclusions and slopes at or above the critical slope
- compact: additionally freezes small outlying patches by excluding a buffer ring around them
- polycentric: additionally excludes a ring around the main (largest) patch, leaving
  its interior holes and every small patch free to grow
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import pandas as pd

from urban_growth.core.errors import ArgumentError, DomainError
from urban_growth.core.schemas import CoefficientSet, GrowthCycleStats, ScenarioSpec, SelfModConfig
from urban_growth.raster.analysis import connected_components, dilate, fill_holes
from urban_growth.raster.layers import BinaryLayer, ProbabilityMap, SlopeLayer
from urban_growth.services.engine import SimState
from urban_growth.services.ensemble import monte_carlo

logger = logging.getLogger(__name__)

# Share of seed urban cells below which a patch counts as small
DEFAULT_SMALL_PATCH_SHARE = 0.01


def small_patch_threshold(spec: ScenarioSpec, seed_urban: BinaryLayer) -> int:
    if spec.small_patch_threshold is not None:
        return spec.small_patch_threshold
    return max(1, math.ceil(DEFAULT_SMALL_PATCH_SHARE * seed_urban.count()))


def build_exclusion(
    spec: ScenarioSpec,
    seed_urban: BinaryLayer,
    base_excluded: BinaryLayer,
    slope: SlopeLayer,
    critical_slope: float,
) -> BinaryLayer:
    """Exclusion layer for a scenario. Cells inside existing patches are never newly excluded."""
    if not (seed_urban.dims == base_excluded.dims == slope.dims):
        raise ArgumentError("seed urban, excluded and slope layers must share dims")

    steep = BinaryLayer(slope.cells >= critical_slope) - seed_urban
    baseline = base_excluded | steep
    if spec.policy == "baseline":
        return baseline

    patches = connected_components(seed_urban)
    if patches.count == 0:
        raise DomainError(f"scenario {spec.name!r} ({spec.policy}) needs at least one urban patch")

    if spec.policy == "compact":
        threshold = small_patch_threshold(spec, seed_urban)
        small = patches.mask(label for label, size in patches.sizes.items() if size < threshold)
        ring = dilate(small, spec.buffer_radius) - small
        logger.debug(f"{spec.name}: {small.count()} small-patch cell(s) below {threshold}, buffer {ring.count()} cell(s)")
    else:
        main = patches.mask([patches.largest()])
        # Holes enclosed by the main patch stay developable
        ring = dilate(main, spec.boundary_ring_width) - fill_holes(main)
        logger.debug(f"{spec.name}: ring of {ring.count()} cell(s) around the main patch")

    return baseline | (ring - seed_urban)


@dataclass(frozen=True)
class ForecastReport:
    """Ensemble-mean statistics per forecast year."""
    scenario: str
    coeffs: CoefficientSet
    stats: List[GrowthCycleStats]

    @property
    def years(self) -> List[int]:
        return [s.year for s in self.stats]


def forecast(
    start_urban: BinaryLayer,
    roads: BinaryLayer,
    slope: SlopeLayer,
    excluded: BinaryLayer,
    coeffs: CoefficientSet,
    horizon_years: int,
    n_mc: int,
    base_seed: int,
    start_year: int = 0,
    config: Optional[SelfModConfig] = None,
    scenario: str = "forecast",
    jobs: int = 1,
) -> Tuple[List[ProbabilityMap], ForecastReport]:
    """Annual probability maps and mean statistics for ``horizon_years`` after ``start_year``."""
    if horizon_years < 1:
        raise ArgumentError(f"horizon must be >= 1 year, got {horizon_years}")
    if n_mc < 1:
        raise ArgumentError(f"n_mc must be >= 1, got {n_mc}")

    state = SimState(
        urban=start_urban,
        roads=roads,
        slope=slope,
        excluded=excluded,
        coeffs=coeffs,
        year=start_year,
        rng_seed=base_seed,
        config=config or SelfModConfig(),
    )
    ensemble = monte_carlo(state, horizon_years, n_mc, base_seed, jobs=jobs)
    report = ForecastReport(scenario=scenario, coeffs=coeffs, stats=ensemble.mean_stats)
    final = report.stats[-1]
    logger.info(
        f"Forecast {scenario}: {start_year + 1}..{start_year + horizon_years}, "
        f"final area {final.area:.1f}, grw_rate {final.grw_rate:.3f}"
    )
    return ensemble.probability_maps(), report


@dataclass(frozen=True)
class ScenarioComparison:
    """Per-year growth rate and area per scenario, plus the final-year ordering."""
    table: pd.DataFrame
    ranking: List[str]


def compare_scenarios(reports: Sequence[ForecastReport]) -> ScenarioComparison:
    """Tabulate reports side by side; ranking is by final-year grw_rate, stable on ties."""
    if len(reports) < 2:
        raise ArgumentError("need at least two forecast reports to compare")
    years = reports[0].years
    for report in reports[1:]:
        if report.years != years:
            raise ArgumentError(
                f"horizon of {report.scenario!r} ({report.years[0]}..{report.years[-1]}) "
                f"differs from {reports[0].scenario!r} ({years[0]}..{years[-1]})"
            )

    columns = {"year": years}
    for report in reports:
        columns[f"{report.scenario}_grw_rate"] = [s.grw_rate for s in report.stats]
        columns[f"{report.scenario}_area"] = [s.area for s in report.stats]
    table = pd.DataFrame(columns)

    ranking = [r.scenario for r in sorted(reports, key=lambda r: -r.stats[-1].grw_rate)]
    return ScenarioComparison(table=table, ranking=ranking)

