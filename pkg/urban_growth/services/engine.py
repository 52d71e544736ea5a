"""
Growth engine - one cycle of the urban cellular automaton.

A cycle runs four substeps against a working copy of the urban layer:
1. spontaneous growth (sng)
2. new spreading centers (counted in og)
3. edge growth (counted in og)
4. road-influenced growth (rt)
then applies boom/bust self-modification to the coefficients.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Literal, Optional, Tuple

import numpy as np

from urban_growth.core.errors import LayerValidationError
from urban_growth.core.schemas import (
    CoefficientSet,
    GrowthCycleStats,
    SelfModConfig,
    growth_rate,
    round_half_up,
)
from urban_growth.raster.analysis import (
    centroid_stats,
    connected_components,
    edge_pixel_count,
    moore_neighbor_count,
)
from urban_growth.raster.layers import BinaryLayer, SlopeLayer

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]
Regime = Literal["boom", "bust", "steady"]

_OFFSETS: Tuple[Cell, ...] = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)

# Spontaneous attempts per cycle, as a fraction of the grid diagonal at dispersion 100
SPONTANEOUS_DIAGONAL_FRACTION = 0.005
# Divisor of (rows + cols) giving the road search radius at road_gravity 100
ROAD_SEARCH_DIVISOR = 16
# Yearly relaxation of the boom/bust multipliers toward 1
MULTIPLIER_DECAY = 0.01


@dataclass(frozen=True)
class SimState:
    """Everything one simulation run carries from year to year."""
    urban: BinaryLayer
    roads: BinaryLayer
    slope: SlopeLayer
    excluded: BinaryLayer
    coeffs: CoefficientSet
    year: int = 0
    rng_seed: int = 0
    config: SelfModConfig = field(default_factory=SelfModConfig)
    # Consecutive years already spent in boom / bust before this cycle
    boom_age: int = 0
    bust_age: int = 0

    def __post_init__(self):
        dims = self.urban.dims
        for name in ("roads", "slope", "excluded"):
            other = getattr(self, name).dims
            if other != dims:
                raise LayerValidationError(f"dims {other} differ from urban dims {dims}", layer=name)
        overlap = np.argwhere(self.urban.cells & self.excluded.cells)
        if len(overlap):
            r, c = (int(v) for v in overlap[0])
            raise LayerValidationError("urban cell lies in the excluded layer", layer="urban", year=self.year, cell=(r, c))


# ─────────────────────────────────────────────────────────────
# Gates and formulas
# ─────────────────────────────────────────────────────────────

def slope_accept_probability(slope_pct: float, slope_resistance: float, critical_slope: float) -> float:
    """Probability that a candidate cell passes the slope gate."""
    if slope_pct >= critical_slope:
        return 0.0
    return ((critical_slope - slope_pct) / critical_slope) ** (slope_resistance / 50.0)


def slope_gate_grid(slope: SlopeLayer, slope_resistance: float, critical_slope: float) -> np.ndarray:
    """``slope_accept_probability`` evaluated for every cell."""
    values = slope.cells.astype(np.float64)
    base = np.clip((critical_slope - values) / critical_slope, 0.0, None)
    gate = base ** (slope_resistance / 50.0)
    return np.where(values >= critical_slope, 0.0, gate)


def spontaneous_attempts(rows: int, cols: int, dispersion: float) -> int:
    return round_half_up((dispersion / 100.0) * SPONTANEOUS_DIAGONAL_FRACTION * math.hypot(rows, cols) * 100.0)


def road_search_radius(rows: int, cols: int, road_gravity: float) -> int:
    return math.ceil((road_gravity / 100.0) * (rows + cols) / ROAD_SEARCH_DIVISOR)


def _neighbors(r: int, c: int, rows: int, cols: int) -> List[Cell]:
    return [
        (r + dr, c + dc)
        for dr, dc in _OFFSETS
        if 0 <= r + dr < rows and 0 <= c + dc < cols
    ]


def _working(state: SimState, urban: Optional[np.ndarray]) -> np.ndarray:
    return state.urban.cells.copy() if urban is None else urban


def _gate(state: SimState, gate: Optional[np.ndarray]) -> np.ndarray:
    if gate is not None:
        return gate
    return slope_gate_grid(state.slope, state.coeffs.slope_resistance, state.config.critical_slope)


def _urbanize_around(
    center: Cell,
    urban: np.ndarray,
    state: SimState,
    gate: np.ndarray,
    rng: np.random.Generator,
    skip_roads: bool = False,
) -> List[Cell]:
    """Urbanize up to two distinct random eligible neighbours of ``center``."""
    rows, cols = urban.shape
    excluded = state.excluded.cells
    roads = state.roads.cells
    candidates = [
        cell for cell in _neighbors(*center, rows, cols)
        if not urban[cell] and not excluded[cell] and not (skip_roads and roads[cell])
    ]
    added: List[Cell] = []
    for index in rng.permutation(len(candidates)):
        if len(added) == 2:
            break
        cell = candidates[index]
        if rng.random() < gate[cell]:
            urban[cell] = True
            added.append(cell)
    return added


# ─────────────────────────────────────────────────────────────
# Substeps
# ─────────────────────────────────────────────────────────────

def spontaneous_growth(
    state: SimState,
    rng: np.random.Generator,
    urban: Optional[np.ndarray] = None,
    gate: Optional[np.ndarray] = None,
) -> Tuple[List[Cell], int]:
    """Substep 1: random cell draws, each urbanized if free, allowed and slope-gated."""
    urban = _working(state, urban)
    gate = _gate(state, gate)
    rows, cols = urban.shape
    attempts = spontaneous_attempts(rows, cols, state.coeffs.dispersion)
    if attempts == 0:
        return [], 0

    draws = rng.integers(0, rows * cols, size=attempts)
    uniforms = rng.random(attempts)
    free = ~urban.ravel() & ~state.excluded.cells.ravel()
    accepted = draws[free[draws] & (uniforms < gate.ravel()[draws])]
    # Repeated draws of one cell urbanize it once, at its first acceptance
    _, first = np.unique(accepted, return_index=True)
    flat = accepted[np.sort(first)]

    np.put(urban, flat, True)
    cells = [(int(i) // cols, int(i) % cols) for i in flat]
    return cells, len(cells)


def new_spreading_centers(
    state: SimState,
    spontaneously_urbanized: Iterable[Cell],
    rng: np.random.Generator,
    urban: Optional[np.ndarray] = None,
    gate: Optional[np.ndarray] = None,
) -> Tuple[List[Cell], int]:
    """Substep 2: spontaneous cells may become centers urbanizing two neighbours."""
    urban = _working(state, urban)
    gate = _gate(state, gate)
    rows, cols = urban.shape
    breed_p = state.coeffs.breed / 100.0

    added: List[Cell] = []
    for center in spontaneously_urbanized:
        # Off-grid neighbours count as non-urban
        urban_neighbors = sum(1 for cell in _neighbors(*center, rows, cols) if urban[cell])
        if len(_OFFSETS) - urban_neighbors < 2:
            continue
        if rng.random() >= breed_p:
            continue
        added.extend(_urbanize_around(center, urban, state, gate, rng))
    return added, len(added)


def edge_growth(
    state: SimState,
    rng: np.random.Generator,
    urban: Optional[np.ndarray] = None,
    gate: Optional[np.ndarray] = None,
) -> Tuple[List[Cell], int]:
    """
    Substep 3: cells with >= 3 urban Moore neighbours urbanize with
    probability spread/100 times the slope gate.

    Neighbour counts come from the cycle-start layer, so cells added in this
    substep never enable others within it.
    """
    urban = _working(state, urban)
    gate = _gate(state, gate)
    if state.coeffs.spread <= 0:
        return [], 0

    counts = moore_neighbor_count(state.urban.cells)
    candidates = np.flatnonzero(((counts >= 3) & ~urban & ~state.excluded.cells).ravel())
    if candidates.size == 0:
        return [], 0

    uniforms = rng.random(candidates.size)
    flat = candidates[uniforms < (state.coeffs.spread / 100.0) * gate.ravel()[candidates]]
    np.put(urban, flat, True)
    cols = urban.shape[1]
    cells = [(int(i) // cols, int(i) % cols) for i in flat]
    return cells, len(cells)


def _road_walk(start: Cell, steps: int, roads: np.ndarray, rng: np.random.Generator) -> Cell:
    """Random walk along 8-connected road cells without immediate backtracking."""
    rows, cols = roads.shape
    previous: Optional[Cell] = None
    current = start
    for _ in range(steps):
        options = [cell for cell in _neighbors(*current, rows, cols) if roads[cell]]
        if previous is not None and len(options) > 1:
            options = [cell for cell in options if cell != previous]
        if not options:
            break
        previous, current = current, options[int(rng.integers(len(options)))]
    return current


def road_influenced_growth(
    state: SimState,
    newly_urbanized: List[Cell],
    rng: np.random.Generator,
    urban: Optional[np.ndarray] = None,
    gate: Optional[np.ndarray] = None,
) -> Tuple[List[Cell], int]:
    """
    Substep 4: road trips from this cycle's new cells.

    Each trip finds the nearest road cell within the road-gravity radius, walks
    ``dispersion`` steps along the network and treats the terminus as a new
    spreading center for its non-road neighbours.
    """
    urban = _working(state, urban)
    gate = _gate(state, gate)
    trips = round_half_up(state.coeffs.breed)
    road_cells = np.argwhere(state.roads.cells)
    if trips == 0 or not newly_urbanized or len(road_cells) == 0:
        return [], 0

    rows, cols = urban.shape
    radius = road_search_radius(rows, cols, state.coeffs.road_gravity)
    steps = round_half_up(state.coeffs.dispersion)

    added: List[Cell] = []
    for _ in range(trips):
        r, c = newly_urbanized[int(rng.integers(len(newly_urbanized)))]
        distance = np.maximum(np.abs(road_cells[:, 0] - r), np.abs(road_cells[:, 1] - c))
        nearest = distance.min()
        if nearest > radius:
            continue
        entries = road_cells[distance == nearest]
        entry = entries[int(rng.integers(len(entries)))]
        terminus = _road_walk((int(entry[0]), int(entry[1])), steps, state.roads.cells, rng)
        added.extend(_urbanize_around(terminus, urban, state, gate, rng, skip_roads=True))
    return added, len(added)


# ─────────────────────────────────────────────────────────────
# Self-modification
# ─────────────────────────────────────────────────────────────

def growth_regime(grw_rate: float, config: SelfModConfig) -> Regime:
    if grw_rate > config.critical_high:
        return "boom"
    if grw_rate < config.critical_low:
        return "bust"
    return "steady"


def effective_boom(config: SelfModConfig, years_since_onset: int) -> float:
    return max(1.0, config.boom - MULTIPLIER_DECAY * years_since_onset)


def effective_bust(config: SelfModConfig, years_since_onset: int) -> float:
    return min(1.0, config.bust + MULTIPLIER_DECAY * years_since_onset)


def apply_self_modification(
    coeffs: CoefficientSet,
    grw_rate: float,
    config: SelfModConfig,
    years_since_boom_onset: int = 0,
    years_since_bust_onset: int = 0,
) -> CoefficientSet:
    """Boom/bust feedback on the coefficients, clamped to [0,100]."""
    if not config.enabled:
        return coeffs
    regime = growth_regime(grw_rate, config)
    if regime == "steady":
        return coeffs

    if regime == "boom":
        factor = effective_boom(config, years_since_boom_onset)
        return CoefficientSet.clamped(
            dispersion=coeffs.dispersion * factor,
            breed=coeffs.breed * factor,
            spread=coeffs.spread * factor,
            slope_resistance=coeffs.slope_resistance / config.boom,
            road_gravity=coeffs.road_gravity * config.boom,
        )

    factor = effective_bust(config, years_since_bust_onset)
    return CoefficientSet.clamped(
        dispersion=coeffs.dispersion * factor,
        breed=coeffs.breed * factor,
        spread=coeffs.spread * factor,
        slope_resistance=coeffs.slope_resistance * config.boom,
        road_gravity=coeffs.road_gravity,
    )


# ─────────────────────────────────────────────────────────────
# Cycle
# ─────────────────────────────────────────────────────────────

def summarize_urban(urban: BinaryLayer, slope: SlopeLayer, excluded: BinaryLayer) -> dict:
    """Spatial statistics of one urban layer (zeros where undefined)."""
    area = urban.count()
    available = int(excluded.cells.size - np.count_nonzero(excluded.cells))
    summary = {
        "area": float(area),
        "pct_urban": 100.0 * area / available if available else 0.0,
        "edges": float(edge_pixel_count(urban)),
        "num_clusters": 0.0,
        "mean_cluster_size": 0.0,
        "xmean": 0.0,
        "ymean": 0.0,
        "std_x": 0.0,
        "std_y": 0.0,
        "rad": 0.0,
        "slope": 0.0,
    }
    if area == 0:
        return summary

    patches = connected_components(urban)
    centroid = centroid_stats(urban)
    summary.update(
        num_clusters=float(patches.count),
        mean_cluster_size=area / patches.count,
        slope=float(slope.cells[urban.cells].mean()),
        **centroid._asdict(),
    )
    return summary


def run_cycle(state: SimState, rng: np.random.Generator) -> Tuple[SimState, GrowthCycleStats]:
    """One growth year: substeps 1-4, statistics, then self-modification."""
    urban = state.urban.cells.copy()
    gate = _gate(state, None)

    spontaneous, sng = spontaneous_growth(state, rng, urban=urban, gate=gate)
    centers, center_count = new_spreading_centers(state, spontaneous, rng, urban=urban, gate=gate)
    edge, edge_count = edge_growth(state, rng, urban=urban, gate=gate)
    _, rt = road_influenced_growth(state, spontaneous + centers + edge, rng, urban=urban, gate=gate)

    og = center_count + edge_count
    grw_pix = sng + og + rt
    new_urban = BinaryLayer(urban)
    summary = summarize_urban(new_urban, state.slope, state.excluded)
    rate = growth_rate(grw_pix, summary["area"])

    regime = growth_regime(rate, state.config) if state.config.enabled else "steady"
    coeffs = apply_self_modification(state.coeffs, rate, state.config, state.boom_age, state.bust_age)
    if coeffs != state.coeffs:
        logger.debug(f"Year {state.year + 1}: {regime} at grw_rate {rate:.3f} -> {coeffs}")

    stats = GrowthCycleStats(
        year=state.year + 1,
        sng=sng,
        og=og,
        rt=rt,
        grw_pix=grw_pix,
        grw_rate=rate,
        **summary,
        **coeffs.model_dump(),
    )
    next_state = replace(
        state,
        urban=new_urban,
        coeffs=coeffs,
        year=state.year + 1,
        boom_age=state.boom_age + 1 if regime == "boom" else 0,
        bust_age=state.bust_age + 1 if regime == "bust" else 0,
    )
    return next_state, stats
