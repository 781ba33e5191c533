"""Characterization of elementary inventories into three endpoint indicators."""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

log = logging.getLogger(__name__)


class Indicator(str, enum.Enum):
    CLIMATE_CHANGE = "climate_change"
    ECOSYSTEMS = "ecosystems"
    HUMAN_HEALTH = "human_health"

    @property
    def unit(self) -> str:
        return INDICATOR_UNITS[self]


INDICATORS: tuple[Indicator, ...] = tuple(Indicator)

INDICATOR_UNITS = {
    Indicator.CLIMATE_CHANGE: "t CO2eq",
    Indicator.ECOSYSTEMS: "PDF.m2.yr",
    Indicator.HUMAN_HEALTH: "DALY",
}

# Unit the factor table is expressed in, and the multiplier into the output unit.
FACTOR_UNITS = {
    Indicator.CLIMATE_CHANGE: ("kg CO2eq", 1e-3),
    Indicator.ECOSYSTEMS: ("PDF.m2.yr", 1.0),
    Indicator.HUMAN_HEALTH: ("DALY", 1.0),
}


class Phase(str, enum.Enum):
    PRODUCTION = "production"
    DELIVERY = "delivery"
    USE = "use"
    END_OF_LIFE = "end_of_life"


PHASES: tuple[Phase, ...] = tuple(Phase)


class ImpactError(ValueError):
    pass


@dataclass(frozen=True)
class ImpactMethod:
    """Characterization factors keyed by ``(flow_id, indicator)``.

    Factors are in the factor-table unit of each indicator (kg CO2eq per
    flow unit for climate change); :func:`characterize` converts to the
    reported unit.
    """

    name: str
    factors: Mapping[tuple[str, Indicator], float]

    def __post_init__(self):
        clean = {}
        for (flow_id, ind), value in self.factors.items():
            value = float(value)
            if not math.isfinite(value):
                raise ImpactError(f"factor for ({flow_id}, {ind}) is not finite")
            clean[(flow_id, Indicator(ind))] = value
        object.__setattr__(self, "factors", MappingProxyType(clean))

    @property
    def flows(self) -> frozenset[str]:
        return frozenset(flow_id for flow_id, _ in self.factors)

    def factor(self, flow_id: str, indicator: Indicator) -> float:
        return self.factors.get((flow_id, indicator), 0.0)

    def rescaled(self, indicator: Indicator, factor: float) -> ImpactMethod:
        return ImpactMethod(
            self.name,
            {k: (v * factor if k[1] is indicator else v) for k, v in self.factors.items()},
        )


@dataclass(frozen=True)
class Characterization:
    totals: Mapping[Indicator, float]
    coverage: float
    uncharacterized: tuple[str, ...]

    def __getitem__(self, indicator: Indicator) -> float:
        return self.totals[Indicator(indicator)]


def characterize(g: Mapping[str, float], method: ImpactMethod) -> Characterization:
    """Sum factor x amount per indicator; report characterized mass share."""
    sums = {ind: 0.0 for ind in INDICATORS}
    known = method.flows
    missing = []
    covered = 0.0
    total = 0.0
    for flow_id, amount in g.items():
        if not math.isfinite(amount):
            raise ImpactError(f"inventory entry {flow_id!r} is not finite: {amount}")
        total += abs(amount)
        if flow_id not in known:
            if amount != 0.0:
                missing.append(flow_id)
            continue
        covered += abs(amount)
        for ind in INDICATORS:
            sums[ind] += method.factor(flow_id, ind) * amount
    if missing:
        log.info("uncharacterized flows under %s: %s", method.name, ", ".join(sorted(missing)))
    totals = {ind: sums[ind] * FACTOR_UNITS[ind][1] for ind in INDICATORS}
    coverage = covered / total if total > 0 else 1.0
    return Characterization(MappingProxyType(totals), coverage, tuple(sorted(missing)))


@dataclass(frozen=True)
class PhaseImpact:
    phase: Phase
    totals: Mapping[Indicator, float]

    def __post_init__(self):
        object.__setattr__(self, "phase", Phase(self.phase))
        object.__setattr__(
            self, "totals", MappingProxyType({Indicator(k): float(v) for k, v in self.totals.items()})
        )

    def __getitem__(self, indicator: Indicator) -> float:
        return self.totals.get(Indicator(indicator), 0.0)


@dataclass(frozen=True)
class LifecycleTotals:
    totals: Mapping[Indicator, float]
    shares: Mapping[Indicator, Mapping[Phase, float] | None]
    phases: Mapping[Phase, PhaseImpact] = field(default_factory=dict)

    def share(self, phase: Phase, indicator: Indicator) -> float | None:
        per_phase = self.shares[Indicator(indicator)]
        if per_phase is None:
            return None
        return per_phase.get(Phase(phase), 0.0)


def aggregate_phases(phase_impacts: Iterable[PhaseImpact]) -> LifecycleTotals:
    """Lifecycle totals per indicator plus each phase's share.

    Shares are ``None`` for an indicator whose total is zero.
    """
    by_phase: dict[Phase, PhaseImpact] = {}
    for pi in phase_impacts:
        if pi.phase in by_phase:
            raise ImpactError(f"duplicate phase {pi.phase.value!r}")
        by_phase[pi.phase] = pi
    totals = {}
    shares: dict[Indicator, dict[Phase, float] | None] = {}
    for ind in INDICATORS:
        total = math.fsum(pi[ind] for pi in by_phase.values())
        totals[ind] = total
        if total == 0.0:
            shares[ind] = None
        else:
            shares[ind] = {ph: pi[ind] / total for ph, pi in by_phase.items()}
    return LifecycleTotals(totals, shares, by_phase)
