"""
Shared fixtures: small synthetic cities and on-disk projects.
"""

from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pytest

from urban_growth.core.schemas import CoefficientSet, SelfModConfig
from urban_growth.raster.io import write_grid
from urban_growth.raster.layers import BinaryLayer, LayerStack, SlopeLayer
from urban_growth.services.engine import SimState
from urban_growth.services.ensemble import run_rng, simulate

TRUTH = CoefficientSet(dispersion=20, breed=60, spread=40, slope_resistance=30, road_gravity=50)


def square(cells: np.ndarray, top: int, left: int, size: int) -> None:
    cells[top:top + size, left:left + size] = True


def seed_city(size: int = 32) -> Tuple[BinaryLayer, BinaryLayer, SlopeLayer, BinaryLayer]:
    """One central patch, a few outlying 3x3 villages, a road cross, a steep band and a lake."""
    urban = np.zeros((size, size), dtype=bool)
    core = size // 4
    square(urban, size // 2 - core // 2, size // 2 - core // 2, core)
    for top, left in ((2, 2), (2, size - 5), (size - 5, 2)):
        square(urban, top, left, 3)

    roads = np.zeros((size, size), dtype=bool)
    roads[size // 2, :] = True
    roads[:, size // 2] = True

    slope = np.zeros((size, size), dtype=np.int16)
    slope[:, -3:] = 80
    slope[:, -6:-3] = 30

    excluded = np.zeros((size, size), dtype=bool)
    excluded[size - 6:size - 2, size - 12:size - 8] = True
    excluded &= ~urban
    return BinaryLayer(urban), BinaryLayer(roads), SlopeLayer(slope), BinaryLayer(excluded)


def synthetic_stack(
    size: int = 32,
    coeffs: CoefficientSet = TRUTH,
    years: Tuple[int, ...] = (2000, 2004, 2008, 2012),
    seed: int = 7,
) -> LayerStack:
    """Historical layers generated by the engine itself from known coefficients."""
    urban, roads, slope, excluded = seed_city(size)
    state = SimState(urban=urban, roads=roads, slope=slope, excluded=excluded, coeffs=coeffs, year=years[0])
    run = simulate(state, years[-1] - years[0], run_rng(seed, 0))
    series = [(years[0], urban)] + [(y, BinaryLayer(run.urban[y - years[0] - 1])) for y in years[1:]]
    return LayerStack(
        urban_series=series,
        road_series=[(years[0], roads), (years[2], roads)],
        slope=slope,
        excluded=excluded,
    )


def write_project(
    root: Path,
    stack: LayerStack,
    extra: str = "",
    fmt: str = "ascii",
) -> Path:
    """Write a stack's layers and an INI project file under ``root``."""
    ext = "asc" if fmt == "ascii" else "pgm"
    layers = root / "layers"
    layers.mkdir(parents=True, exist_ok=True)
    urban_entries: List[str] = []
    road_entries: List[str] = []
    for year, layer in stack.urban_series:
        write_grid(layer, layers / f"urban_{year}.{ext}", fmt)
        urban_entries.append(f"{year}:layers/urban_{year}.{ext}")
    for year, layer in stack.road_series:
        write_grid(layer, layers / f"roads_{year}.{ext}", fmt)
        road_entries.append(f"{year}:layers/roads_{year}.{ext}")
    write_grid(stack.slope, layers / f"slope.{ext}", fmt)
    write_grid(stack.excluded, layers / f"excluded.{ext}", fmt)

    config = root / "project.ini"
    config.write_text(
        "[dataset]\n"
        f"urban = {', '.join(urban_entries)}\n"
        f"roads = {', '.join(road_entries)}\n"
        f"slope = layers/slope.{ext}\n"
        f"excluded = layers/excluded.{ext}\n"
        "\n[engine]\nseed = 11\n"
        "\n[output]\ndirectory = out\nformats = pgm, ascii\n"
        + extra,
        encoding="utf-8",
    )
    return config


def tree_bytes(root: Path) -> Dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def flat_state():
    """Factory for a state on a flat, unexcluded, roadless grid."""

    def _make(urban: np.ndarray, coeffs: CoefficientSet = CoefficientSet(), **kwargs) -> SimState:
        shape = urban.shape
        return SimState(
            urban=BinaryLayer(urban),
            roads=BinaryLayer(kwargs.pop("roads", np.zeros(shape, dtype=bool))),
            slope=SlopeLayer(kwargs.pop("slope", np.zeros(shape, dtype=np.int16))),
            excluded=BinaryLayer(kwargs.pop("excluded", np.zeros(shape, dtype=bool))),
            coeffs=coeffs,
            config=kwargs.pop("config", SelfModConfig()),
            **kwargs,
        )

    return _make


@pytest.fixture(scope="session")
def history() -> LayerStack:
    return synthetic_stack()
