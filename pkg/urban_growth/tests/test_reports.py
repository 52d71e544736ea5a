"""
Tests for the CSV and summary writers.
"""

import numpy as np
import pytest
from matplotlib import image

from urban_growth.core.errors import ArgumentError, ConfigError
from urban_growth.core.schemas import CoefficientSet, GrowthCycleStats, MetricVector, PhaseConfig
from urban_growth.raster.io import read_grid
from urban_growth.raster.layers import GrayLayer, ProbabilityMap
from urban_growth.services.calibration import CalibrationReport, CalibrationRow
from urban_growth.services.reports import (
    FORECAST_COLUMNS,
    calibration_csv,
    forecast_csv,
    hillshade_composite,
    read_coefficients,
    summary_text,
    write_hillshade_composites,
    write_probability_maps,
)
from urban_growth.services.scenarios import ForecastReport

BEST = CoefficientSet.from_values([1, 36, 3, 34, 49])


def report() -> CalibrationReport:
    metrics = MetricVector(**{name: 0.5 for name in MetricVector.model_fields})
    return CalibrationReport(phase=PhaseConfig(name="coarse", step=25), rows=[CalibrationRow(BEST, metrics)])


def test_calibration_csv_layout():
    lines = calibration_csv(report()).splitlines()
    assert lines[0] == (
        "diffuse,breed,spread,slp_res,rd_grav,compare,pop,edges,clusters,"
        "cluster_size,leesallee,slope,pct_urban,xmean,ymean,rad"
    )
    assert lines[1].startswith("1,36,3,34,49,0.500000")


def test_summary_round_trip(tmp_path):
    path = tmp_path / "best_coefficients.txt"
    path.write_text(summary_text([report()], BEST.model_copy(update={"breed": 40.0})), encoding="utf-8")
    text = path.read_text(encoding="utf-8")
    assert "[phase1]" in text and "name = coarse" in text
    assert read_coefficients(path, "best") == BEST
    assert read_coefficients(path).breed == 40


def test_read_coefficients_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_coefficients(tmp_path / "missing.txt")
    path = tmp_path / "summary.txt"
    path.write_text("[best]\ndispersion = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_coefficients(path)
    with pytest.raises(ConfigError):
        read_coefficients(path, "best")


def test_forecast_csv_columns():
    stats = [GrowthCycleStats(year=2011, sng=4.18, og=6464, rt=2.84, grw_pix=6471.02, area=602098, dispersion=1)]
    csv = forecast_csv(ForecastReport(scenario="s1", coeffs=BEST, stats=stats))
    header, row = csv.splitlines()
    assert header.split(",") == ["year", *FORECAST_COLUMNS]
    assert row.startswith("2011,1.000000,")
    assert "4.180000,6464.000000,2.840000" in row


def test_probability_maps_written_per_year_and_format(tmp_path):
    maps = [ProbabilityMap(np.array([[0.0, 0.5], [1.0, 0.25]]), year=y) for y in (2011, 2012)]
    written = write_probability_maps(maps, tmp_path / "s1", ["pgm", "ascii"])
    assert [p.name for p in written] == ["prob_2011.pgm", "prob_2011.asc", "prob_2012.pgm", "prob_2012.asc"]
    assert read_grid(written[0], "gray").cells.tolist() == [[0, 128], [255, 64]]
    assert read_grid(written[1], "probability").cells.tolist() == [[0.0, 0.5], [1.0, 0.25]]


def test_hillshade_shows_through_where_nothing_urbanizes():
    relief = GrayLayer(np.array([[0, 128], [255, 51]]))
    prob = ProbabilityMap(np.array([[0.0, 0.0], [1.0, 0.5]]), year=2011)
    rgb = hillshade_composite(prob, relief)
    assert rgb.shape == (2, 2, 3)
    assert np.allclose(rgb[0, 0], 0.0)
    assert np.allclose(rgb[0, 1], 128 / 255)
    assert not np.allclose(rgb[1, 0], 1.0)
    assert rgb.min() >= 0.0 and rgb.max() <= 1.0


def test_hillshade_composite_needs_matching_dims():
    with pytest.raises(ArgumentError):
        hillshade_composite(ProbabilityMap(np.zeros((2, 3))), GrayLayer(np.zeros((3, 2))))


def test_hillshade_composites_written_per_year(tmp_path):
    relief = GrayLayer(np.full((3, 4), 200))
    maps = [ProbabilityMap(np.eye(3, 4), year=y) for y in (2011, 2012)]
    written = write_hillshade_composites(maps, relief, tmp_path / "s1")
    assert [p.name for p in written] == ["prob_2011.png", "prob_2012.png"]
    pixels = image.imread(written[0])
    assert pixels.shape[:2] == (3, 4)
    assert np.allclose(pixels[0, 1, :3], 200 / 255, atol=1 / 255)
    assert not np.allclose(pixels[0, 0, :3], 200 / 255, atol=1 / 255)
    assert written[0].read_bytes() == written[1].read_bytes()
