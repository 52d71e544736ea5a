"""
Project configuration: an INI file validated into Pydantic models.
Schema reference: docs/CONFIGURATION.md
"""

import configparser
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError

from urban_growth.core.config import settings
from urban_growth.core.errors import ConfigError
from urban_growth.core.schemas import (
    COEFFICIENT_NAMES,
    CoefficientRange,
    CoefficientSet,
    PhaseConfig,
    ScenarioSpec,
    SelfModConfig,
    default_schedule,
)

logger = logging.getLogger(__name__)

GridFormat = Literal["pgm", "ascii"]


# ─────────────────────────────────────────────────────────────
# Sections
# ─────────────────────────────────────────────────────────────

class DatasetConfig(BaseModel):
    urban: List[Tuple[int, Path]]
    roads: List[Tuple[int, Path]]
    slope: Path
    excluded: Optional[Path] = None
    hillshade: Optional[Path] = None

    def paths(self) -> List[Tuple[str, Path]]:
        named = [(f"urban {y}", p) for y, p in self.urban] + [(f"roads {y}", p) for y, p in self.roads]
        named.append(("slope", self.slope))
        for name in ("excluded", "hillshade"):
            if getattr(self, name) is not None:
                named.append((name, getattr(self, name)))
        return named


class EngineConfig(BaseModel):
    seed: int = Field(default_factory=lambda: settings.SEED)
    self_modification: SelfModConfig = Field(default_factory=SelfModConfig)


class CalibrationConfig(BaseModel):
    phases: List[PhaseConfig] = Field(default_factory=default_schedule)
    forecast_mc_runs: int = Field(10, ge=1)


class ForecastConfig(BaseModel):
    coefficients: Optional[CoefficientSet] = None
    horizon: int = Field(20, ge=1)
    mc_runs: int = Field(10, ge=1)


class OutputConfig(BaseModel):
    directory: Path = Field(default_factory=lambda: Path(settings.OUTPUT_DIR))
    formats: List[GridFormat] = Field(default_factory=lambda: ["pgm", "ascii"])


class ProjectConfig(BaseModel):
    source: Optional[Path] = None
    dataset: DatasetConfig
    engine: EngineConfig = Field(default_factory=EngineConfig)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)
    scenarios: Dict[str, ScenarioSpec] = Field(
        default_factory=lambda: {"baseline": ScenarioSpec(name="baseline", policy="baseline")}
    )
    forecast: ForecastConfig = Field(default_factory=ForecastConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


# ─────────────────────────────────────────────────────────────
# INI parsing
# ─────────────────────────────────────────────────────────────

def _items(value: str) -> List[str]:
    return [item.strip() for item in value.replace("\n", ",").split(",") if item.strip()]


def _dated_paths(value: str, base: Path, section: str, key: str) -> List[Tuple[int, Path]]:
    entries = []
    for item in _items(value):
        year, sep, path = item.partition(":")
        if not sep or not year.strip().lstrip("-").isdigit():
            raise ConfigError(f"expected YEAR:PATH entries, got {item!r}", section, key)
        entries.append((int(year), base / path.strip()))
    return entries


def _range(value: str, step: int, section: str, key: str) -> CoefficientRange:
    lo, sep, hi = value.partition(":")
    try:
        return CoefficientRange(lo=int(lo), hi=int(hi if sep else lo), step=step)
    except (ValueError, ValidationError) as e:
        raise ConfigError(f"bad range {value!r}: {e}", section, key) from None


def _section(parser: configparser.ConfigParser, name: str) -> Dict[str, str]:
    return dict(parser[name]) if parser.has_section(name) else {}


def _phase(parser: configparser.ConfigParser, name: str) -> PhaseConfig:
    section = f"phase.{name}"
    if not parser.has_section(section):
        raise ConfigError(f"phase {name!r} is listed but has no [{section}] section", "calibration", "phases")
    values = _section(parser, section)
    step = int(values.get("step", 25))
    ranges = None
    if any(coef in values for coef in COEFFICIENT_NAMES):
        ranges = {
            coef: _range(values.get(coef, "0:100"), step, section, coef) for coef in COEFFICIENT_NAMES
        }
    return PhaseConfig(
        name=name,
        step=step,
        ranges=ranges,
        resolution_divisor=int(values.get("resolution_divisor", 1)),
        mc_runs=int(values.get("mc_runs", 1)),
        top_k=int(values.get("top_k", 3)),
    )


def parse_project(text: str, base_dir: Union[str, Path] = ".", source: Optional[Path] = None) -> ProjectConfig:
    """Parse INI text; relative paths resolve against ``base_dir``."""
    base = Path(base_dir)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse config: {e}") from None

    if not parser.has_section("dataset"):
        raise ConfigError("missing [dataset] section", "dataset")
    try:
        data = _section(parser, "dataset")
        for key in ("urban", "roads", "slope"):
            if key not in data:
                raise ConfigError("required key missing", "dataset", key)
        dataset = DatasetConfig(
            urban=_dated_paths(data["urban"], base, "dataset", "urban"),
            roads=_dated_paths(data["roads"], base, "dataset", "roads"),
            slope=base / data["slope"],
            excluded=base / data["excluded"] if data.get("excluded") else None,
            hillshade=base / data["hillshade"] if data.get("hillshade") else None,
        )

        engine_values = _section(parser, "engine")
        selfmod_keys = ("critical_high", "critical_low", "boom", "bust", "critical_slope")
        engine = EngineConfig(
            **({"seed": int(engine_values["seed"])} if "seed" in engine_values else {}),
            self_modification=SelfModConfig(
                **{k: float(engine_values[k]) for k in selfmod_keys if k in engine_values},
                enabled=parser.getboolean("engine", "self_modification", fallback=True),
            ),
        )

        calibration_values = _section(parser, "calibration")
        calibration = CalibrationConfig(
            **({"phases": [_phase(parser, n) for n in _items(calibration_values["phases"])]}
               if "phases" in calibration_values else {}),
            forecast_mc_runs=int(calibration_values.get("forecast_mc_runs", 10)),
        )

        scenarios = {}
        for section in parser.sections():
            if not section.startswith("scenario."):
                continue
            name = section.split(".", 1)[1]
            values = _section(parser, section)
            scenarios[name] = ScenarioSpec(
                name=name,
                policy=values.get("policy", "baseline"),
                small_patch_threshold=int(values["small_patch_threshold"]) if "small_patch_threshold" in values else None,
                buffer_radius=int(values.get("buffer_radius", 1)),
                boundary_ring_width=int(values.get("boundary_ring_width", 2)),
            )

        forecast_values = _section(parser, "forecast")
        override = None
        present = [k for k in COEFFICIENT_NAMES if k in forecast_values]
        if present:
            if len(present) != len(COEFFICIENT_NAMES):
                raise ConfigError("give all five coefficients or none", "forecast")
            override = CoefficientSet.from_values(forecast_values[k] for k in COEFFICIENT_NAMES)
        forecast = ForecastConfig(
            coefficients=override,
            horizon=int(forecast_values.get("horizon", 20)),
            mc_runs=int(forecast_values.get("mc_runs", 10)),
        )

        output_values = _section(parser, "output")
        output = OutputConfig(
            **({"directory": base / output_values["directory"]} if "directory" in output_values else {}),
            **({"formats": _items(output_values["formats"])} if "formats" in output_values else {}),
        )

        return ProjectConfig(
            source=source,
            dataset=dataset,
            engine=engine,
            calibration=calibration,
            **({"scenarios": scenarios} if scenarios else {}),
            forecast=forecast,
            output=output,
        )
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from None
    except ValueError as e:
        raise ConfigError(f"invalid value: {e}") from None


def load_project(path: Union[str, Path], check_files: bool = True) -> ProjectConfig:
    """Load a project file; every referenced layer file must exist."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from None
    config = parse_project(text, base_dir=path.parent, source=path)
    if check_files:
        missing = [f"{name} ({p})" for name, p in config.dataset.paths() if not p.is_file()]
        if missing:
            raise ConfigError(f"missing layer file(s): {', '.join(missing)}", "dataset")
    logger.debug(f"Loaded project {path}: {len(config.dataset.urban)} urban year(s), scenarios {list(config.scenarios)}")
    return config
