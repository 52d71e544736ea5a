"""
Tests for the calibration fit metrics.
"""

import numpy as np
import pytest

from urban_growth.core.errors import ArgumentError
from urban_growth.core.schemas import METRIC_NAMES, CoefficientSet
from urban_growth.raster.layers import BinaryLayer
from urban_growth.services.engine import SimState
from urban_growth.services.ensemble import EnsembleResult, monte_carlo
from urban_growth.services.metrics import (
    SERIES_FIELDS,
    ControlSeries,
    compare_metric,
    lee_sallee,
    metric_vector,
    r2,
)
from urban_growth.tests.conftest import seed_city, synthetic_stack


# ─────────────────────────────────────────────────────────────
# r2
# ─────────────────────────────────────────────────────────────

def test_r2_perfect_and_affine():
    assert r2([1, 2, 3, 5], [1, 2, 3, 5]) == pytest.approx(1.0)
    assert r2([1, 2, 3, 5], [5, 7, 9, 13]) == pytest.approx(1.0)


def test_r2_hand_computed():
    assert r2([1, 2, 3], [1, 2, 4]) == pytest.approx(0.9643, abs=1e-4)


def test_r2_constant_series_scores_zero():
    assert r2([4, 4, 4], [1, 2, 3]) == 0.0
    assert r2([1, 2, 3], [7, 7, 7]) == 0.0


def test_r2_rejects_bad_lengths():
    with pytest.raises(ArgumentError):
        r2([1, 2, 3], [1, 2])
    with pytest.raises(ArgumentError):
        r2([1], [1])


def test_r2_affine_invariance_on_random_series():
    rng = np.random.default_rng(0)
    for _ in range(50):
        actual = rng.normal(size=6)
        modeled = rng.normal(size=6)
        scale, shift = rng.uniform(0.5, 5), rng.uniform(-10, 10)
        assert r2(actual, modeled * scale + shift) == pytest.approx(r2(actual, modeled), abs=1e-9)
        assert 0.0 <= r2(actual, modeled) <= 1.0


# ─────────────────────────────────────────────────────────────
# lee_sallee and compare
# ─────────────────────────────────────────────────────────────

def cells_layer(ones, shape=(4, 4)) -> BinaryLayer:
    cells = np.zeros(shape, dtype=bool)
    for cell in ones:
        cells[cell] = True
    return BinaryLayer(cells)


def test_lee_sallee_examples():
    a = cells_layer([(0, 0), (0, 1), (1, 0), (1, 1)])
    b = cells_layer([(1, 0), (1, 1), (2, 0), (2, 1)])
    assert lee_sallee(a, a) == 1.0
    assert lee_sallee(a, cells_layer([(3, 3)])) == 0.0
    assert lee_sallee(a, b) == pytest.approx(2 / 6)
    assert lee_sallee(cells_layer([]), cells_layer([])) == 1.0


def test_lee_sallee_rejects_dim_mismatch():
    with pytest.raises(ArgumentError):
        lee_sallee(cells_layer([], (4, 4)), cells_layer([], (4, 5)))


def test_lee_sallee_matches_set_arithmetic():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a = BinaryLayer(rng.random((8, 8)) < rng.random())
        b = BinaryLayer(rng.random((8, 8)) < rng.random())
        sa = {tuple(x) for x in np.argwhere(a.cells)}
        sb = {tuple(x) for x in np.argwhere(b.cells)}
        expected = 1.0 if not sa | sb else len(sa & sb) / len(sa | sb)
        assert lee_sallee(a, b) == pytest.approx(expected)
        assert lee_sallee(a, b) == lee_sallee(b, a)
        assert (lee_sallee(a, b) == 1.0) == (a == b)


def test_compare_metric_examples():
    assert compare_metric(100, 100) == 1.0
    assert compare_metric(50, 100) == 0.5
    assert compare_metric(200, 100) == 0.5
    assert compare_metric(0, 100) == 0.0
    assert compare_metric(37, 80) == compare_metric(80, 37)
    with pytest.raises(ArgumentError):
        compare_metric(10, 0)


# ─────────────────────────────────────────────────────────────
# metric_vector
# ─────────────────────────────────────────────────────────────

def test_identity_replay_scores_one(history):
    replay = EnsembleResult.from_layers(history.urban_series, history.slope, history.excluded)
    controls = ControlSeries.from_stack(history)
    vector = metric_vector(replay, controls, history.urban_series[-1][1])
    for name, field in SERIES_FIELDS.items():
        if np.ptp(controls.values[field]) > 0:
            assert getattr(vector, name) == pytest.approx(1.0), name
    assert vector.compare == 1.0
    assert vector.leesallee == 1.0


def test_missing_control_year_is_an_error(history):
    controls = ControlSeries.from_stack(history)
    short = EnsembleResult.from_layers(history.urban_series[:2], history.slope, history.excluded)
    with pytest.raises(ArgumentError):
        metric_vector(short, controls, history.urban_series[-1][1])


def test_undergrowth_is_penalized(history):
    seed_year, seed = history.urban_series[0]
    inert = SimState(
        urban=seed, roads=history.road_series[0][1], slope=history.slope,
        excluded=history.excluded, coeffs=CoefficientSet(), year=seed_year,
    )
    ensemble = monte_carlo(inert, history.years[-1] - seed_year, 2, base_seed=1)
    vector = metric_vector(ensemble, ControlSeries.from_stack(history), history.urban_series[-1][1])
    assert vector.compare < 1.0
    assert vector.leesallee < 1.0


def test_vector_matches_scripted_recomputation():
    stack = synthetic_stack(size=16, years=(2000, 2002, 2004, 2006), seed=3)
    urban, roads, slope, excluded = stack.urban_series[0][1], stack.road_series[0][1], stack.slope, stack.excluded
    state = SimState(
        urban=urban, roads=roads, slope=slope, excluded=excluded,
        coeffs=CoefficientSet(dispersion=30, breed=40, spread=50, slope_resistance=10, road_gravity=20),
        year=2000,
    )
    ensemble = monte_carlo(state, 6, 3, base_seed=8)
    vector = metric_vector(ensemble, ControlSeries.from_stack(stack), stack.urban_series[-1][1])

    def stats_of(cells):
        rows, cols = np.nonzero(cells)
        return {"area": float(cells.sum()), "xmean": cols.mean(), "ymean": rows.mean()}

    controls = [stats_of(layer.cells) for _, layer in stack.urban_series[1:]]
    modeled = [ensemble.stats_for(year) for year in (2002, 2004, 2006)]

    def scripted_r2(actual, sim):
        actual, sim = np.array(actual), np.array(sim)
        if np.ptp(actual) == 0 or np.ptp(sim) == 0:
            return 0.0
        return float(np.corrcoef(actual, sim)[0, 1] ** 2)

    for name, field in (("pop", "area"), ("xmean", "xmean"), ("ymean", "ymean")):
        expected = scripted_r2([c[field] for c in controls], [getattr(m, field) for m in modeled])
        assert getattr(vector, name) == pytest.approx(expected, abs=1e-9), name

    hits = ensemble.yearly_hits[ensemble.index_of(2006)]
    extent = hits >= 1.5
    final = stack.urban_series[-1][1].cells
    union = np.count_nonzero(extent | final)
    assert vector.leesallee == pytest.approx(np.count_nonzero(extent & final) / union)
    area_model, area_actual = modeled[-1].area, controls[-1]["area"]
    assert vector.compare == pytest.approx(min(area_model, area_actual) / max(area_model, area_actual))
    assert all(0.0 <= v <= 1.0 for v in vector.as_tuple())
    assert len(vector.as_tuple()) == len(METRIC_NAMES)


def test_control_series_needs_two_years():
    urban, _, slope, excluded = seed_city(16)
    with pytest.raises(ArgumentError):
        ControlSeries.from_layers([(2000, urban), (2001, urban)], slope, excluded)
