"""
Shared Pydantic schemas used across the package.
"""

import math
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


# ─────────────────────────────────────────────────────────────
# Coefficients
# ─────────────────────────────────────────────────────────────

COEFFICIENT_NAMES: Tuple[str, ...] = (
    "dispersion",
    "breed",
    "spread",
    "slope_resistance",
    "road_gravity",
)


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves away from zero for positives."""
    return int(math.floor(value + 0.5))


class CoefficientSet(BaseModel):
    """The five growth coefficients. Carried as reals, presented as integers."""
    model_config = ConfigDict(frozen=True)

    dispersion: float = Field(0.0, ge=0.0, le=100.0)
    breed: float = Field(0.0, ge=0.0, le=100.0)
    spread: float = Field(0.0, ge=0.0, le=100.0)
    slope_resistance: float = Field(0.0, ge=0.0, le=100.0)
    road_gravity: float = Field(0.0, ge=0.0, le=100.0)

    @classmethod
    def from_values(cls, values) -> "CoefficientSet":
        """Build from a sequence ordered as ``COEFFICIENT_NAMES``."""
        values = list(values)
        if len(values) != len(COEFFICIENT_NAMES):
            raise ValueError(f"expected {len(COEFFICIENT_NAMES)} coefficients, got {len(values)}")
        return cls(**dict(zip(COEFFICIENT_NAMES, (float(v) for v in values))))

    @classmethod
    def clamped(cls, **values: float) -> "CoefficientSet":
        return cls(**{k: min(100.0, max(0.0, float(v))) for k, v in values.items()})

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in COEFFICIENT_NAMES)

    def as_ints(self) -> Tuple[int, ...]:
        return tuple(round_half_up(v) for v in self.as_tuple())

    def rounded(self) -> "CoefficientSet":
        return CoefficientSet.from_values(self.as_ints())

    def __str__(self) -> str:
        return "{" + ", ".join(f"{n}={v}" for n, v in zip(COEFFICIENT_NAMES, self.as_ints())) + "}"


class SelfModConfig(BaseModel):
    """Boom/bust constants and the critical slope."""
    model_config = ConfigDict(frozen=True)

    critical_high: float = 5.0
    critical_low: float = 0.1
    boom: float = 1.1
    bust: float = 0.9
    critical_slope: float = 50.0
    enabled: bool = True

    @model_validator(mode="after")
    def _check_ranges(self) -> "SelfModConfig":
        if not 0 < self.critical_low < self.critical_high:
            raise ValueError("require 0 < critical_low < critical_high")
        if self.boom <= 1:
            raise ValueError("boom must be > 1")
        if not 0 < self.bust < 1:
            raise ValueError("bust must lie in (0, 1)")
        if not 0 < self.critical_slope <= 100:
            raise ValueError("critical_slope must lie in (0, 100]")
        return self


# ─────────────────────────────────────────────────────────────
# Growth statistics
# ─────────────────────────────────────────────────────────────

class GrowthCycleStats(BaseModel):
    """Per-year record of one run, or its ensemble mean."""
    year: int
    sng: float = 0.0
    og: float = 0.0
    rt: float = 0.0
    grw_pix: float = 0.0
    area: float = 0.0
    grw_rate: float = 0.0
    xmean: float = 0.0
    ymean: float = 0.0
    std_x: float = 0.0
    std_y: float = 0.0
    rad: float = 0.0
    pct_urban: float = 0.0
    num_clusters: float = 0.0
    mean_cluster_size: float = 0.0
    edges: float = 0.0
    slope: float = 0.0
    # Coefficients in force at the end of the year (after self-modification)
    dispersion: float = 0.0
    breed: float = 0.0
    spread: float = 0.0
    slope_resistance: float = 0.0
    road_gravity: float = 0.0

    def coefficients(self) -> CoefficientSet:
        return CoefficientSet.clamped(**{n: getattr(self, n) for n in COEFFICIENT_NAMES})


STAT_FIELDS: Tuple[str, ...] = tuple(n for n in GrowthCycleStats.model_fields if n != "year")


def growth_rate(grw_pix: float, area_after: float) -> float:
    """Percent growth relative to the urban area after the cycle."""
    if area_after <= 0:
        return 0.0
    return 100.0 * grw_pix / area_after


# ─────────────────────────────────────────────────────────────
# Fit metrics
# ─────────────────────────────────────────────────────────────

METRIC_NAMES: Tuple[str, ...] = (
    "compare",
    "pop",
    "edges",
    "clusters",
    "cluster_size",
    "leesallee",
    "slope",
    "pct_urban",
    "xmean",
    "ymean",
    "rad",
)


class MetricVector(BaseModel):
    """The eleven calibration fit scores."""
    model_config = ConfigDict(frozen=True)

    compare: float = Field(ge=0.0, le=1.0)
    pop: float = Field(ge=0.0, le=1.0)
    edges: float = Field(ge=0.0, le=1.0)
    clusters: float = Field(ge=0.0, le=1.0)
    cluster_size: float = Field(ge=0.0, le=1.0)
    leesallee: float = Field(ge=0.0, le=1.0)
    slope: float = Field(ge=0.0, le=1.0)
    pct_urban: float = Field(ge=0.0, le=1.0)
    xmean: float = Field(ge=0.0, le=1.0)
    ymean: float = Field(ge=0.0, le=1.0)
    rad: float = Field(ge=0.0, le=1.0)

    @property
    def product(self) -> float:
        """Diagnostic composite of all eleven scores."""
        return math.prod(getattr(self, name) for name in METRIC_NAMES)

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in METRIC_NAMES)


# ─────────────────────────────────────────────────────────────
# Calibration
# ─────────────────────────────────────────────────────────────

class CoefficientRange(BaseModel):
    """Inclusive range swept in fixed increments."""
    model_config = ConfigDict(frozen=True)

    lo: int = Field(0, ge=0, le=100)
    hi: int = Field(100, ge=0, le=100)
    step: int = Field(25, ge=1)

    @model_validator(mode="after")
    def _check_order(self) -> "CoefficientRange":
        if self.lo > self.hi:
            raise ValueError(f"range lo {self.lo} exceeds hi {self.hi}")
        return self

    def values(self) -> List[int]:
        """lo, lo+step, ... <= hi, with hi always included."""
        out = list(range(self.lo, self.hi + 1, self.step))
        if out[-1] != self.hi:
            out.append(self.hi)
        return out


def full_ranges(step: int) -> Dict[str, CoefficientRange]:
    return {name: CoefficientRange(lo=0, hi=100, step=step) for name in COEFFICIENT_NAMES}


class PhaseConfig(BaseModel):
    """One calibration phase. ``ranges`` of None means derive from the previous phase."""
    model_config = ConfigDict(frozen=True)

    name: str = "phase"
    step: int = Field(25, ge=1)
    ranges: Optional[Dict[str, CoefficientRange]] = None
    resolution_divisor: int = Field(1, ge=1)
    mc_runs: int = Field(1, ge=1)
    top_k: int = Field(3, ge=1)

    @model_validator(mode="after")
    def _check_ranges(self) -> "PhaseConfig":
        if self.ranges is not None:
            missing = [n for n in COEFFICIENT_NAMES if n not in self.ranges]
            if missing:
                raise ValueError(f"ranges missing coefficients: {', '.join(missing)}")
        return self

    def effective_ranges(self) -> Dict[str, CoefficientRange]:
        return dict(self.ranges) if self.ranges is not None else full_ranges(self.step)

    def with_ranges(self, ranges: Dict[str, CoefficientRange]) -> "PhaseConfig":
        return self.model_copy(update={"ranges": dict(ranges)})


def default_schedule() -> List[PhaseConfig]:
    """Coarse / fine / final phases at desk-scale Monte Carlo counts."""
    return [
        PhaseConfig(name="coarse", step=25, resolution_divisor=4, mc_runs=4, top_k=3),
        PhaseConfig(name="fine", step=5, resolution_divisor=2, mc_runs=7, top_k=3),
        PhaseConfig(name="final", step=1, resolution_divisor=1, mc_runs=10, top_k=3),
    ]


# ─────────────────────────────────────────────────────────────
# Scenarios
# ─────────────────────────────────────────────────────────────

Policy = Literal["baseline", "compact", "polycentric"]


class ScenarioSpec(BaseModel):
    """An exclusion-layer policy. A threshold of None means 1% of seed urban cells."""
    model_config = ConfigDict(frozen=True)

    name: str
    policy: Policy = "baseline"
    small_patch_threshold: Optional[int] = Field(None, ge=1)
    buffer_radius: int = Field(1, ge=0)
    boundary_ring_width: int = Field(2, ge=0)
