"""
Brute-force calibration.

Each phase sweeps a lattice of coefficient sets at a reduced resolution, scores
every set with Monte Carlo runs over the historical period and ranks by
leesallee. Later phases narrow the ranges around the best sets and use smaller
steps at finer resolution. All sets of a phase share the same run seeds, so a
set's score never depends on where it sits in the sweep.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from urban_growth.core.errors import ArgumentError
from urban_growth.core.schemas import (
    COEFFICIENT_NAMES,
    CoefficientRange,
    CoefficientSet,
    MetricVector,
    PhaseConfig,
    SelfModConfig,
    round_half_up,
)
from urban_growth.raster.analysis import downsample
from urban_growth.raster.layers import BinaryLayer, LayerStack
from urban_growth.services.engine import SimState
from urban_growth.services.ensemble import monte_carlo
from urban_growth.services.metrics import ControlSeries, metric_vector
from urban_growth.services.tracker import RunTracker, run_tracker

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibrationRow:
    coeffs: CoefficientSet
    metrics: MetricVector


def rank_key(row: CalibrationRow) -> Tuple:
    """Descending leesallee, ties to the lexicographically smallest coefficient tuple."""
    return (-row.metrics.leesallee, row.coeffs.as_tuple())


@dataclass(frozen=True)
class CalibrationReport:
    phase: PhaseConfig
    rows: List[CalibrationRow]
    seconds: float = 0.0

    @property
    def best(self) -> CalibrationRow:
        return self.rows[0]

    def top(self, k: int) -> List[CalibrationRow]:
        return self.rows[:k]


# ─────────────────────────────────────────────────────────────
# Lattice
# ─────────────────────────────────────────────────────────────

def enumerate_lattice(phase: PhaseConfig) -> List[CoefficientSet]:
    """Cartesian product of every coefficient's progression, in coefficient order."""
    ranges = phase.effective_ranges()
    axes = [ranges[name].values() for name in COEFFICIENT_NAMES]
    return [CoefficientSet.from_values(values) for values in product(*axes)]


def narrow_ranges(report: CalibrationReport, top_k: int, new_step: int) -> Dict[str, CoefficientRange]:
    """Span of the top sets per coefficient, widened by one old step and clamped to [0,100]."""
    if not report.rows:
        raise ArgumentError("cannot narrow ranges from an empty report")
    old = report.phase.effective_ranges()
    top = report.top(top_k)
    ranges = {}
    for name in COEFFICIENT_NAMES:
        values = [round_half_up(getattr(row.coeffs, name)) for row in top]
        step = old[name].step
        ranges[name] = CoefficientRange(
            lo=max(0, min(values) - step),
            hi=min(100, max(values) + step),
            step=new_step,
        )
    return ranges


# ─────────────────────────────────────────────────────────────
# Evaluation
# ─────────────────────────────────────────────────────────────

def downsample_stack(data: LayerStack, divisor: int) -> LayerStack:
    """Coarsen every layer; excluded cells that coarsen onto urban cells are released."""
    if divisor == 1:
        return data
    urban = [(year, downsample(layer, divisor)) for year, layer in data.urban_series]
    any_urban = np.logical_or.reduce([layer.cells for _, layer in urban])
    excluded = downsample(data.excluded, divisor)
    return LayerStack(
        urban_series=urban,
        road_series=[(year, downsample(layer, divisor)) for year, layer in data.road_series],
        slope=downsample(data.slope, divisor),
        excluded=BinaryLayer(excluded.cells & ~any_urban),
        hillshade=None,
    )


def initial_state(data: LayerStack, coeffs: CoefficientSet, config: SelfModConfig, seed: int = 0) -> SimState:
    """Simulation state at the earliest urban year."""
    start_year, start_urban = data.urban_series[0]
    return SimState(
        urban=start_urban,
        roads=data.roads_for(start_year),
        slope=data.slope,
        excluded=data.excluded,
        coeffs=coeffs,
        year=start_year,
        rng_seed=seed,
        config=config,
    )


@dataclass(frozen=True)
class _PhaseContext:
    data: LayerStack
    controls: ControlSeries
    final_actual: BinaryLayer
    mc_runs: int
    base_seed: int
    config: SelfModConfig

    @property
    def years(self) -> int:
        return self.data.years[-1] - self.data.years[0]


def _evaluate(context: _PhaseContext, coeffs: CoefficientSet) -> CalibrationRow:
    state = initial_state(context.data, coeffs, context.config, context.base_seed)
    ensemble = monte_carlo(state, context.years, context.mc_runs, context.base_seed)
    return CalibrationRow(coeffs=coeffs, metrics=metric_vector(ensemble, context.controls, context.final_actual))


_WORKER_CONTEXT: Optional[_PhaseContext] = None


def _init_worker(context: _PhaseContext) -> None:
    global _WORKER_CONTEXT
    _WORKER_CONTEXT = context


def _evaluate_in_worker(coeffs: CoefficientSet) -> CalibrationRow:
    return _evaluate(_WORKER_CONTEXT, coeffs)


def run_phase(
    phase: PhaseConfig,
    data: LayerStack,
    base_seed: int,
    config: Optional[SelfModConfig] = None,
    jobs: int = 1,
    extra: Sequence[CoefficientSet] = (),
) -> CalibrationReport:
    """Score every lattice set (plus ``extra`` sets) and rank by leesallee."""
    data.validate()
    config = config or SelfModConfig()
    lattice = list(dict.fromkeys(list(enumerate_lattice(phase)) + list(extra)))

    coarse = downsample_stack(data, phase.resolution_divisor)
    context = _PhaseContext(
        data=coarse,
        controls=ControlSeries.from_stack(coarse),
        final_actual=coarse.urban_series[-1][1],
        mc_runs=phase.mc_runs,
        base_seed=base_seed,
        config=config,
    )
    logger.info(
        f"Phase {phase.name}: {len(lattice)} set(s) at {coarse.dims} "
        f"(divisor {phase.resolution_divisor}, {phase.mc_runs} MC run(s), jobs {jobs})"
    )

    started = time.perf_counter()
    if jobs <= 1 or len(lattice) == 1:
        rows = [_evaluate(context, coeffs) for coeffs in lattice]
    else:
        chunk = max(1, len(lattice) // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(context,)) as pool:
            rows = list(pool.map(_evaluate_in_worker, lattice, chunksize=chunk))
    rows.sort(key=rank_key)
    report = CalibrationReport(
        phase=phase.with_ranges(phase.effective_ranges()),
        rows=rows,
        seconds=time.perf_counter() - started,
    )
    logger.info(
        f"Phase {phase.name}: best {report.best.coeffs} leesallee {report.best.metrics.leesallee:.4f}"
    )
    return report


def calibrate(
    data: LayerStack,
    schedule: Sequence[PhaseConfig],
    base_seed: int,
    config: Optional[SelfModConfig] = None,
    jobs: int = 1,
    tracker: RunTracker = run_tracker,
) -> Tuple[CoefficientSet, List[CalibrationReport]]:
    """Chain phases, narrowing ranges and injecting each phase's best into the next."""
    if not schedule:
        raise ArgumentError("calibration schedule is empty")
    if schedule[-1].resolution_divisor != 1:
        raise ArgumentError("the last calibration phase must run at full resolution (divisor 1)")

    run_id = tracker.create_run("calibrate", [phase.name for phase in schedule])
    reports: List[CalibrationReport] = []
    try:
        for phase in schedule:
            extra: List[CoefficientSet] = []
            if reports:
                previous = reports[-1]
                if phase.ranges is None:
                    phase = phase.with_ranges(narrow_ranges(previous, previous.phase.top_k, phase.step))
                extra.append(previous.best.coeffs)
            tracker.update_stage(run_id, phase.name, "running", f"{len(enumerate_lattice(phase))} lattice set(s)")
            report = run_phase(phase, data, base_seed, config=config, jobs=jobs, extra=extra)
            reports.append(report)
            tracker.update_stage(
                run_id, phase.name, "done",
                f"best {report.best.coeffs} leesallee {report.best.metrics.leesallee:.4f}",
            )
    except Exception as e:
        tracker.update_stage(run_id, phase.name, "error", str(e))
        tracker.finish(run_id, "error")
        raise
    tracker.finish(run_id)
    return reports[-1].best.coeffs, reports


# ─────────────────────────────────────────────────────────────
# Forecast coefficients
# ─────────────────────────────────────────────────────────────

def average_coefficients(sets: Sequence[CoefficientSet]) -> CoefficientSet:
    """Per-coefficient mean, rounded to the nearest integer and clamped to [0,100]."""
    if not sets:
        raise ArgumentError("no coefficient sets to average")
    means = np.mean([s.as_tuple() for s in sets], axis=0)
    return CoefficientSet.clamped(**{
        name: round_half_up(float(value)) for name, value in zip(COEFFICIENT_NAMES, means)
    })


def derive_forecast_coefficients(
    best: CoefficientSet,
    data: LayerStack,
    mc_runs: int,
    base_seed: int,
    config: Optional[SelfModConfig] = None,
    jobs: int = 1,
) -> CoefficientSet:
    """Run the historical period from ``best`` and average the final-year coefficients."""
    if mc_runs < 1:
        raise ArgumentError(f"mc_runs must be >= 1, got {mc_runs}")
    config = config or SelfModConfig()
    state = initial_state(data, best, config, base_seed)
    years = data.years[-1] - data.years[0]
    ensemble = monte_carlo(state, years, mc_runs, base_seed, jobs=jobs)
    derived = average_coefficients(ensemble.final_coeffs)
    logger.info(f"Forecast coefficients derived from {best}: {derived}")
    return derived
