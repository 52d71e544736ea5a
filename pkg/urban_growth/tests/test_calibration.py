"""
Tests for the calibration sweep, range narrowing and forecast coefficient derivation.
"""

import random

import numpy as np
import pytest

from urban_growth.core.errors import ArgumentError, LayerValidationError
from urban_growth.core.schemas import (
    COEFFICIENT_NAMES,
    CoefficientRange,
    CoefficientSet,
    MetricVector,
    PhaseConfig,
    SelfModConfig,
    default_schedule,
)
from urban_growth.services.calibration import (
    CalibrationReport,
    CalibrationRow,
    average_coefficients,
    calibrate,
    derive_forecast_coefficients,
    downsample_stack,
    enumerate_lattice,
    narrow_ranges,
    rank_key,
    run_phase,
)
from urban_growth.services.tracker import RunTracker
from urban_growth.tests.conftest import TRUTH, synthetic_stack


@pytest.fixture(scope="module")
def small_history():
    return synthetic_stack(size=16, years=(2000, 2002, 2004, 2006), seed=5)


def point_phase(values, name="point", **kwargs) -> PhaseConfig:
    ranges = {n: CoefficientRange(lo=v, hi=v, step=1) for n, v in zip(COEFFICIENT_NAMES, values)}
    return PhaseConfig(name=name, ranges=ranges, **kwargs)


def grid_phase(axes, name="grid", step=1, **kwargs) -> PhaseConfig:
    ranges = {n: CoefficientRange(lo=lo, hi=hi, step=s) for n, (lo, hi, s) in zip(COEFFICIENT_NAMES, axes)}
    return PhaseConfig(name=name, step=step, ranges=ranges, **kwargs)


def scores(leesallee: float) -> MetricVector:
    values = {name: 0.5 for name in MetricVector.model_fields}
    values["leesallee"] = leesallee
    return MetricVector(**values)


def report_of(sets, phase=None) -> CalibrationReport:
    rows = [CalibrationRow(coeffs=CoefficientSet.from_values(s), metrics=scores(0.9 - 0.1 * i)) for i, s in enumerate(sets)]
    return CalibrationReport(phase=phase or PhaseConfig(step=25), rows=rows)


# ─────────────────────────────────────────────────────────────
# Lattice and narrowing
# ─────────────────────────────────────────────────────────────

def test_full_coarse_lattice_size():
    assert len(enumerate_lattice(PhaseConfig(step=25))) == 5 ** 5


def test_point_lattice():
    assert enumerate_lattice(point_phase([1, 1, 1, 1, 1])) == [CoefficientSet.from_values([1] * 5)]


def test_progression_includes_hi():
    assert CoefficientRange(lo=0, hi=10, step=4).values() == [0, 4, 8, 10]
    lattice = enumerate_lattice(grid_phase([(0, 10, 4)] + [(0, 0, 1)] * 4))
    assert [s.dispersion for s in lattice] == [0, 4, 8, 10]


def test_lattice_order_is_deterministic():
    phase = grid_phase([(0, 50, 25)] * 5)
    assert enumerate_lattice(phase) == enumerate_lattice(phase)
    assert enumerate_lattice(phase)[0] == CoefficientSet()
    assert enumerate_lattice(phase)[1].road_gravity == 25


def test_narrow_single_best():
    ranges = narrow_ranges(report_of([[50] * 5]), top_k=1, new_step=5)
    assert all((r.lo, r.hi, r.step) == (25, 75, 5) for r in ranges.values())


def test_narrow_clamps_at_zero():
    ranges = narrow_ranges(report_of([[0] * 5, [0] * 5]), top_k=2, new_step=5)
    assert all((r.lo, r.hi) == (0, 25) for r in ranges.values())


def test_narrow_spanning_top_sets():
    ranges = narrow_ranges(report_of([[25] * 5, [75] * 5, [50] * 5]), top_k=2, new_step=5)
    assert all((r.lo, r.hi) == (0, 100) for r in ranges.values())


def test_narrowed_ranges_contain_top_values():
    rng = np.random.default_rng(0)
    for _ in range(50):
        sets = [list(rng.choice([0, 25, 50, 75, 100], 5)) for _ in range(4)]
        ranges = narrow_ranges(report_of(sets), top_k=3, new_step=5)
        for values in sets[:3]:
            for name, value in zip(COEFFICIENT_NAMES, values):
                assert value in ranges[name].values()


def test_default_fine_phase_cost():
    coarse, fine, final = default_schedule()
    ranges = narrow_ranges(report_of([[50] * 5] * 3, phase=coarse), top_k=coarse.top_k, new_step=fine.step)
    assert len(enumerate_lattice(fine.with_ranges(ranges))) == 11 ** 5
    edge = narrow_ranges(report_of([[0] * 5] * 3, phase=coarse), top_k=coarse.top_k, new_step=fine.step)
    assert len(enumerate_lattice(fine.with_ranges(edge))) == 6 ** 5


def test_narrow_rejects_empty_report():
    with pytest.raises(ArgumentError):
        narrow_ranges(CalibrationReport(phase=PhaseConfig(), rows=[]), 1, 5)


# ─────────────────────────────────────────────────────────────
# Ranking
# ─────────────────────────────────────────────────────────────

def test_ties_go_to_smallest_coefficient_tuple():
    rows = [
        CalibrationRow(coeffs=CoefficientSet.from_values([5, 0, 0, 0, 0]), metrics=scores(0.7)),
        CalibrationRow(coeffs=CoefficientSet.from_values([1, 9, 0, 0, 0]), metrics=scores(0.7)),
        CalibrationRow(coeffs=CoefficientSet.from_values([9, 9, 9, 9, 9]), metrics=scores(0.8)),
    ]
    ranked = sorted(rows, key=rank_key)
    assert [r.coeffs.dispersion for r in ranked] == [9, 1, 5]


def test_ranking_ignores_evaluation_order(small_history):
    phase = grid_phase([(0, 50, 50), (0, 50, 50), (20, 40, 20), (10, 10, 1), (0, 0, 1)], mc_runs=2)
    report = run_phase(phase, small_history, base_seed=4)
    shuffled = list(report.rows)
    random.Random(1).shuffle(shuffled)
    assert sorted(shuffled, key=rank_key) == report.rows


# ─────────────────────────────────────────────────────────────
# Phases
# ─────────────────────────────────────────────────────────────

def test_single_point_phase(small_history):
    report = run_phase(point_phase([10, 20, 30, 40, 50], mc_runs=2), small_history, base_seed=1)
    assert len(report.rows) == 1
    assert report.best.coeffs == CoefficientSet.from_values([10, 20, 30, 40, 50])
    assert report.seconds >= 0


def test_phase_is_deterministic(small_history):
    phase = grid_phase([(0, 40, 40), (20, 20, 1), (0, 40, 40), (10, 10, 1), (50, 50, 1)],
                       resolution_divisor=2, mc_runs=2)
    first = run_phase(phase, small_history, base_seed=12)
    second = run_phase(phase, small_history, base_seed=12)
    assert first.rows == second.rows


def test_phase_worker_count_does_not_change_report(small_history):
    phase = grid_phase([(0, 40, 40), (20, 60, 40), (40, 40, 1), (10, 10, 1), (50, 50, 1)], mc_runs=2)
    assert run_phase(phase, small_history, 6, jobs=1).rows == run_phase(phase, small_history, 6, jobs=2).rows


def test_phase_requires_four_urban_years(small_history):
    short = synthetic_stack(size=16, years=(2000, 2002, 2004), seed=5)
    with pytest.raises(LayerValidationError, match="at least four time periods"):
        run_phase(point_phase([1] * 5), short, base_seed=1)


def test_downsampled_stack_releases_excluded_under_urban(small_history):
    coarse = downsample_stack(small_history, 4)
    assert coarse.dims.rows == 4
    for _, layer in coarse.urban_series:
        assert not np.any(layer.cells & coarse.excluded.cells)
    assert downsample_stack(small_history, 1) is small_history


# ─────────────────────────────────────────────────────────────
# Chained calibration
# ─────────────────────────────────────────────────────────────

def test_single_phase_point_schedule(small_history):
    best, reports = calibrate(small_history, [point_phase([3, 4, 5, 6, 7])], base_seed=2, tracker=RunTracker())
    assert best == CoefficientSet.from_values([3, 4, 5, 6, 7])
    assert len(reports) == 1


def test_schedule_must_end_at_full_resolution(small_history):
    with pytest.raises(ArgumentError):
        calibrate(small_history, [point_phase([1] * 5, resolution_divisor=2)], base_seed=1)
    with pytest.raises(ArgumentError):
        calibrate(small_history, [], base_seed=1)


def test_previous_best_is_carried_forward(small_history):
    tracker = RunTracker()
    schedule = [
        grid_phase([(0, 50, 50), (50, 50, 1), (0, 50, 50), (10, 10, 1), (50, 50, 1)],
                   name="coarse", resolution_divisor=2, mc_runs=2),
        point_phase([100, 0, 100, 90, 0], name="final", mc_runs=2),
    ]
    best, reports = calibrate(small_history, schedule, base_seed=3, tracker=tracker)
    carried = reports[0].best.coeffs
    assert carried in [row.coeffs for row in reports[1].rows]
    assert len(reports[1].rows) == 2
    assert reports[1].best.metrics.leesallee >= max(
        row.metrics.leesallee for row in reports[1].rows if row.coeffs == carried
    )
    (run,) = tracker.runs.values()
    assert run["status"] == "completed"
    assert [s["status"] for s in run["stages"].values()] == ["done", "done"]


def test_narrowing_fills_in_unset_ranges(small_history):
    schedule = [
        grid_phase([(0, 50, 50), (50, 50, 1), (25, 25, 1), (10, 10, 1), (50, 50, 1)],
                   name="coarse", step=50, resolution_divisor=2, mc_runs=1, top_k=1),
        PhaseConfig(name="final", step=25, mc_runs=1),
    ]
    _, reports = calibrate(small_history, schedule, base_seed=3, tracker=RunTracker())
    best = reports[0].best.coeffs
    final_ranges = reports[1].phase.effective_ranges()
    assert final_ranges["dispersion"].lo == max(0, int(best.dispersion) - 50)
    assert final_ranges["dispersion"].step == 25
    assert final_ranges["spread"].values() == [24, 26]


@pytest.mark.slow
def test_recovers_generating_coefficients():
    data = synthetic_stack()
    axes = [(max(0, v - 20), min(100, v + 20), 20) for v in TRUTH.as_ints()]
    report = run_phase(grid_phase(axes, mc_runs=4), data, base_seed=99, jobs=2)
    truth_row = next(row for row in report.rows if row.coeffs == TRUTH)
    assert truth_row.metrics.leesallee >= report.best.metrics.leesallee - 0.05


@pytest.mark.slow
def test_chained_schedule_recovers_generating_fit():
    data = synthetic_stack(size=64)
    free = CoefficientRange(lo=0, hi=100, step=50)
    coarse_ranges = {name: free for name in ("dispersion", "spread")}
    for name in ("breed", "slope_resistance", "road_gravity"):
        value = int(getattr(TRUTH, name))
        coarse_ranges[name] = CoefficientRange(lo=value, hi=value, step=1)
    schedule = [
        PhaseConfig(name="coarse", step=50, ranges=coarse_ranges, resolution_divisor=4, mc_runs=2, top_k=1),
        PhaseConfig(name="fine", step=20, resolution_divisor=2, mc_runs=2, top_k=1),
        PhaseConfig(name="final", step=20, resolution_divisor=1, mc_runs=2, top_k=1),
    ]

    best, reports = calibrate(data, schedule, base_seed=99, jobs=2, tracker=RunTracker())

    coarse, fine, final = reports
    assert fine.phase.ranges == narrow_ranges(coarse, 1, 20)
    assert final.phase.ranges == narrow_ranges(fine, 1, 20)
    assert coarse.best.coeffs in [row.coeffs for row in fine.rows]
    assert fine.best.coeffs in [row.coeffs for row in final.rows]
    assert best == final.best.coeffs

    truth = run_phase(point_phase(TRUTH.as_ints(), mc_runs=2), data, base_seed=99)
    assert final.best.metrics.leesallee >= truth.best.metrics.leesallee - 0.05


# ─────────────────────────────────────────────────────────────
# Forecast coefficients
# ─────────────────────────────────────────────────────────────

def test_average_coefficients():
    averaged = average_coefficients([
        CoefficientSet.from_values([10, 20, 30, 40, 50]),
        CoefficientSet.from_values([12, 21, 30, 40, 100]),
    ])
    assert averaged.as_ints() == (11, 21, 30, 40, 75)
    with pytest.raises(ArgumentError):
        average_coefficients([])


def test_disabled_dynamics_return_best(small_history):
    best = CoefficientSet.from_values([1, 36, 3, 34, 49])
    derived = derive_forecast_coefficients(best, small_history, 3, 7, config=SelfModConfig(enabled=False))
    assert derived == best


def test_derived_coefficients_are_valid_integers(small_history):
    best = CoefficientSet.from_values([1, 36, 3, 34, 49])
    derived = derive_forecast_coefficients(best, small_history, 4, 7)
    assert all(0 <= v <= 100 and float(v).is_integer() for v in derived.as_tuple())
    assert derived == derive_forecast_coefficients(best, small_history, 4, 7, jobs=2)
    with pytest.raises(ArgumentError):
        derive_forecast_coefficients(best, small_history, 0, 7)

