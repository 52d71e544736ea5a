"""
Monte Carlo ensembles of growth runs.

Run ``i`` of an ensemble is seeded with ``SeedSequence([base_seed, i])`` (numpy's
PCG64 behind ``default_rng``), so every run is reproducible on its own and the
ensemble does not depend on which worker executes which run.

Runs are folded into running sums as they finish: per-year hit counts (integer,
so order-free) and per-year statistic totals (added in run-index order). Only
one hit-count stack per worker is ever alive, whatever the number of runs, and
results are bit-identical for any worker count.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from urban_growth.core.errors import ArgumentError
from urban_growth.core.schemas import STAT_FIELDS, CoefficientSet, GrowthCycleStats, growth_rate
from urban_growth.raster.layers import BinaryLayer, ProbabilityMap, SlopeLayer
from urban_growth.services.engine import SimState, run_cycle, summarize_urban

logger = logging.getLogger(__name__)


def run_seed(base_seed: int, run_index: int) -> np.random.SeedSequence:
    """Seed of one Monte Carlo run."""
    return np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, int(run_index)])


def run_rng(base_seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng(run_seed(base_seed, run_index))


def _cycles(initial: SimState, years: int, rng: np.random.Generator) -> Iterator[Tuple[SimState, GrowthCycleStats]]:
    state = initial
    for _ in range(years):
        state, cycle = run_cycle(state, rng)
        yield state, cycle


@dataclass(frozen=True)
class RunResult:
    """One traced simulation run: per-year stats and the urban layer at the end of each year."""
    stats: List[GrowthCycleStats]
    urban: np.ndarray  # (years, rows, cols) bool
    final: SimState


def simulate(initial: SimState, years: int, rng: np.random.Generator) -> RunResult:
    """Run one simulation keeping every yearly layer (for tracing, not for ensembles)."""
    state = initial
    stats: List[GrowthCycleStats] = []
    layers = np.zeros((years,) + initial.urban.cells.shape, dtype=bool)
    for index, (state, cycle) in enumerate(_cycles(initial, years, rng)):
        stats.append(cycle)
        layers[index] = state.urban.cells
    return RunResult(stats=stats, urban=layers, final=state)


@dataclass(frozen=True)
class RunSummary:
    """What an ensemble keeps of one run once its layers are folded in."""
    stats: List[GrowthCycleStats]
    final_coeffs: CoefficientSet


def _simulate_chunk(
    initial: SimState, years: int, base_seed: int, indices: Sequence[int]
) -> Tuple[List[RunSummary], np.ndarray]:
    """Simulate consecutive runs, summing their yearly layers into one hit-count stack."""
    hits = np.zeros((years,) + initial.urban.cells.shape, dtype=np.int32)
    summaries: List[RunSummary] = []
    for run_index in indices:
        state = initial
        stats: List[GrowthCycleStats] = []
        for index, (state, cycle) in enumerate(_cycles(initial, years, run_rng(base_seed, run_index))):
            stats.append(cycle)
            hits[index] += state.urban.cells
        summaries.append(RunSummary(stats=stats, final_coeffs=state.coeffs))
    return summaries, hits


@dataclass
class EnsembleAccumulator:
    """Running sums of an ensemble; runs must be added in run-index order."""
    years: List[int]
    shape: Tuple[int, ...]
    totals: np.ndarray = field(init=False)
    hits: np.ndarray = field(init=False)
    final_coeffs: List[CoefficientSet] = field(init=False, default_factory=list)

    def __post_init__(self) -> None:
        self.totals = np.zeros((len(self.years), len(STAT_FIELDS)), dtype=np.float64)
        self.hits = np.zeros((len(self.years),) + tuple(self.shape), dtype=np.int32)

    @property
    def n_runs(self) -> int:
        return len(self.final_coeffs)

    def add(self, summary: RunSummary) -> None:
        rows = [[getattr(s, f) for f in STAT_FIELDS] for s in summary.stats]
        self.totals += np.array(rows, dtype=np.float64).reshape(self.totals.shape)
        self.final_coeffs.append(summary.final_coeffs)

    def add_hits(self, hits: np.ndarray) -> None:
        self.hits += hits

    def result(self, initial_urban: Optional[BinaryLayer] = None) -> "EnsembleResult":
        if not self.n_runs:
            raise ArgumentError("an ensemble needs at least one run")
        means = self.totals / self.n_runs
        mean_stats = [
            GrowthCycleStats(year=year, **dict(zip(STAT_FIELDS, (float(v) for v in row))))
            for year, row in zip(self.years, means)
        ]
        return EnsembleResult(
            mean_stats=mean_stats,
            yearly_hits=self.hits,
            n_runs=self.n_runs,
            initial_urban=initial_urban,
            final_coeffs=list(self.final_coeffs),
        )


@dataclass(frozen=True)
class EnsembleResult:
    """Ensemble-mean statistics per year plus per-cell urban hit counts per year."""
    mean_stats: List[GrowthCycleStats]
    yearly_hits: np.ndarray  # (years, rows, cols) int32
    n_runs: int
    initial_urban: Optional[BinaryLayer] = None
    final_coeffs: List[CoefficientSet] = field(default_factory=list)

    @property
    def years(self) -> List[int]:
        return [s.year for s in self.mean_stats]

    @property
    def hit_counts(self) -> np.ndarray:
        """Runs in which each cell ended urban."""
        if len(self.yearly_hits):
            return self.yearly_hits[-1]
        return self.initial_urban.cells.astype(np.int32) * self.n_runs

    def index_of(self, year: int) -> int:
        try:
            return self.years.index(year)
        except ValueError:
            raise ArgumentError(f"ensemble does not cover year {year}") from None

    def stats_for(self, year: int) -> GrowthCycleStats:
        return self.mean_stats[self.index_of(year)]

    def probability_map(self, year: int) -> ProbabilityMap:
        return ProbabilityMap(self.yearly_hits[self.index_of(year)] / self.n_runs, year=year)

    def probability_maps(self) -> List[ProbabilityMap]:
        return [self.probability_map(year) for year in self.years]

    def extent(self, year: int, threshold: float = 0.5) -> BinaryLayer:
        """Cells urban in at least ``threshold`` of the runs."""
        return BinaryLayer(self.yearly_hits[self.index_of(year)] >= threshold * self.n_runs)

    @classmethod
    def from_runs(cls, runs: Sequence[RunResult], initial_urban: Optional[BinaryLayer] = None) -> "EnsembleResult":
        """Aggregate traced runs, in the order given."""
        if not runs:
            raise ArgumentError("an ensemble needs at least one run")
        accumulator = EnsembleAccumulator([s.year for s in runs[0].stats], runs[0].urban.shape[1:])
        for run in runs:
            accumulator.add(RunSummary(stats=run.stats, final_coeffs=run.final.coeffs))
            accumulator.add_hits(run.urban)
        return accumulator.result(initial_urban)

    @classmethod
    def from_layers(
        cls,
        series: Sequence[Tuple[int, BinaryLayer]],
        slope: SlopeLayer,
        excluded: BinaryLayer,
    ) -> "EnsembleResult":
        """Replay dated observed layers as a one-run ensemble."""
        stats = []
        previous = None
        for year, layer in series:
            summary = summarize_urban(layer, slope, excluded)
            grw_pix = 0.0 if previous is None else summary["area"] - previous
            rate = growth_rate(grw_pix, summary["area"])
            stats.append(GrowthCycleStats(year=year, grw_pix=grw_pix, grw_rate=rate, **summary))
            previous = summary["area"]
        hits = np.stack([layer.cells for _, layer in series]).astype(np.int32)
        return cls(mean_stats=stats, yearly_hits=hits, n_runs=1, initial_urban=series[0][1])


def run_chunks(n_runs: int, jobs: int) -> List[List[int]]:
    """Split run indices into at most ``jobs`` contiguous, ordered chunks."""
    parts = min(max(1, jobs), n_runs)
    return [chunk.tolist() for chunk in np.array_split(np.arange(n_runs), parts)]


def monte_carlo(
    initial: SimState,
    years: int,
    n_runs: int,
    base_seed: int,
    jobs: int = 1,
) -> EnsembleResult:
    """Average ``n_runs`` independent runs of ``years`` cycles each."""
    if n_runs < 1:
        raise ArgumentError(f"n_runs must be >= 1, got {n_runs}")
    if years < 0:
        raise ArgumentError(f"years must be >= 0, got {years}")
    accumulator = EnsembleAccumulator([initial.year + i for i in range(1, years + 1)], initial.urban.cells.shape)
    chunks = run_chunks(n_runs, jobs)
    if len(chunks) == 1:
        _fold(accumulator, [_simulate_chunk(initial, years, base_seed, chunks[0])])
    else:
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            _fold(accumulator, pool.map(_simulate_chunk, repeat(initial), repeat(years), repeat(base_seed), chunks))
    logger.debug(f"Monte Carlo: {n_runs} run(s) x {years} year(s) from {initial.year}, seed {base_seed}")
    return accumulator.result(initial.urban)


def _fold(accumulator: EnsembleAccumulator, results: Iterable[Tuple[List[RunSummary], np.ndarray]]) -> None:
    for summaries, hits in results:
        for summary in summaries:
            accumulator.add(summary)
        accumulator.add_hits(hits)
