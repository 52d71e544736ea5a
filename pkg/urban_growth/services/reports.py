"""
Report writers: calibration CSVs, the best-set summary, forecast tables, maps and hillshade images.
Every writer is deterministic so re-running a command reproduces identical bytes.
"""

import configparser
import io
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import matplotlib
import numpy as np
import pandas as pd
from matplotlib import image

from urban_growth.core.errors import ArgumentError, ConfigError
from urban_growth.core.schemas import COEFFICIENT_NAMES, METRIC_NAMES, CoefficientSet, MetricVector
from urban_growth.raster.io import write_grid
from urban_growth.raster.layers import GrayLayer, ProbabilityMap
from urban_growth.services.calibration import CalibrationReport
from urban_growth.services.scenarios import ForecastReport, ScenarioComparison

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"

# Short coefficient column names used in every table
COEFFICIENT_COLUMNS: Dict[str, str] = {
    "dispersion": "diffuse",
    "breed": "breed",
    "spread": "spread",
    "slope_resistance": "slp_res",
    "road_gravity": "rd_grav",
}

FORECAST_COLUMNS: Tuple[str, ...] = (
    "diffuse", "spread", "breed", "slp_res", "rd_grav",
    "sng", "og", "rt", "area", "xmean", "ymean", "pct_urban", "grw_rate", "grw_pix",
)

_FORECAST_FIELDS: Dict[str, str] = {v: k for k, v in COEFFICIENT_COLUMNS.items()}

MAP_EXTENSIONS = {"pgm": "pgm", "ascii": "asc"}

# Probability overlay on hillshade images
OVERLAY_CMAP = "YlOrRd"
OVERLAY_ALPHA = 0.75


def _csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


# ─────────────────────────────────────────────────────────────
# Calibration
# ─────────────────────────────────────────────────────────────

def metrics_frame(rows: Iterable[Tuple[CoefficientSet, MetricVector]]) -> pd.DataFrame:
    """One row per coefficient set: 5 coefficient columns then 11 metric columns."""
    records = []
    for coeffs, metrics in rows:
        record = {COEFFICIENT_COLUMNS[n]: v for n, v in zip(COEFFICIENT_NAMES, coeffs.as_ints())}
        record.update(zip(METRIC_NAMES, metrics.as_tuple()))
        records.append(record)
    return pd.DataFrame(records, columns=[COEFFICIENT_COLUMNS[n] for n in COEFFICIENT_NAMES] + list(METRIC_NAMES))


def calibration_csv(report: CalibrationReport) -> str:
    return _csv(metrics_frame((row.coeffs, row.metrics) for row in report.rows))


def summary_text(reports: Sequence[CalibrationReport], forecast_coeffs: Optional[CoefficientSet] = None) -> str:
    """INI-formatted summary naming each phase's best set and the forecast set."""
    parser = configparser.ConfigParser()
    for index, report in enumerate(reports, start=1):
        best = report.best
        section = f"phase{index}"
        parser[section] = {
            "name": report.phase.name,
            "sets": str(len(report.rows)),
            "resolution_divisor": str(report.phase.resolution_divisor),
            "mc_runs": str(report.phase.mc_runs),
            **{n: str(v) for n, v in zip(COEFFICIENT_NAMES, best.coeffs.as_ints())},
            "leesallee": f"{best.metrics.leesallee:.6f}",
            "product": f"{best.metrics.product:.6f}",
        }
    if reports:
        parser["best"] = {n: str(v) for n, v in zip(COEFFICIENT_NAMES, reports[-1].best.coeffs.as_ints())}
    if forecast_coeffs is not None:
        parser["forecast"] = {n: str(v) for n, v in zip(COEFFICIENT_NAMES, forecast_coeffs.as_ints())}
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def read_coefficients(path: Path, section: str = "forecast") -> CoefficientSet:
    """Read a coefficient set back from a summary file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"summary file {path} not found")
    if section not in parser:
        raise ConfigError(f"no [{section}] section in {path}", section=section)
    try:
        return CoefficientSet.from_values(parser[section][name] for name in COEFFICIENT_NAMES)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"bad coefficient set in {path}: {e}", section=section) from e


# ─────────────────────────────────────────────────────────────
# Forecast
# ─────────────────────────────────────────────────────────────

def forecast_frame(report: ForecastReport) -> pd.DataFrame:
    records = []
    for stats in report.stats:
        record = {"year": stats.year}
        record.update({col: getattr(stats, _FORECAST_FIELDS.get(col, col)) for col in FORECAST_COLUMNS})
        records.append(record)
    return pd.DataFrame(records, columns=["year", *FORECAST_COLUMNS])


def forecast_csv(report: ForecastReport) -> str:
    return _csv(forecast_frame(report))


def comparison_csv(comparison: ScenarioComparison) -> str:
    return _csv(comparison.table)


def write_probability_maps(maps: Sequence[ProbabilityMap], directory: Path, formats: Sequence[str]) -> List[Path]:
    """Write ``prob_<year>.<ext>`` for every map and format."""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for prob in maps:
        for fmt in formats:
            path = directory / f"prob_{prob.year}.{MAP_EXTENSIONS[fmt]}"
            write_grid(prob, path, fmt)
            written.append(path)
    logger.debug(f"Wrote {len(written)} map file(s) to {directory}")
    return written


def hillshade_composite(prob: ProbabilityMap, hillshade: GrayLayer, cmap: str = OVERLAY_CMAP) -> np.ndarray:
    """RGB image of a probability map drawn over the hillshade; cells never urbanized show the relief."""
    if prob.cells.shape != hillshade.cells.shape:
        raise ArgumentError(
            f"hillshade is {hillshade.cells.shape[0]}x{hillshade.cells.shape[1]}, "
            f"map is {prob.cells.shape[0]}x{prob.cells.shape[1]}"
        )
    relief = np.repeat(hillshade.cells[..., None] / 255.0, 3, axis=2)
    overlay = matplotlib.colormaps[cmap](prob.cells)[..., :3]
    alpha = np.where(prob.cells > 0, OVERLAY_ALPHA, 0.0)[..., None]
    return relief * (1.0 - alpha) + overlay * alpha


def write_hillshade_composites(maps: Sequence[ProbabilityMap], hillshade: GrayLayer, directory: Path) -> List[Path]:
    """Write ``prob_<year>.png``: each map over the hillshade background."""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for prob in maps:
        path = directory / f"prob_{prob.year}.png"
        image.imsave(path, hillshade_composite(prob, hillshade), format="png", metadata={"Software": None})
        written.append(path)
    logger.debug(f"Wrote {len(written)} hillshade composite(s) to {directory}")
    return written
