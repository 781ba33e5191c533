"""Usage-hour evaluation, sweeps, dominance and crossover analysis.

Every phase except use is fixed; use is continuous operation, so the total
impact of a scenario is affine in hours: ``F + r * h``. Fixed impacts and the
hourly rate are solved once per scenario and reused everywhere.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from .impact import (
    INDICATORS,
    PHASES,
    ImpactMethod,
    Indicator,
    Phase,
    PhaseImpact,
    aggregate_phases,
    characterize,
)
from .lci import (
    DemandVector,
    Direction,
    InventorySystem,
    LCIError,
    Process,
    SystemModel,
    inventory,
    solve_scaling,
)

DEFAULT_LIFETIME_H = 26_280.0
DEFAULT_GRID_H = (1_000.0, 10_000.0, 50_000.0, 100_000.0)
MAX_SEARCH_H = 1e6
FIXED_PHASES = (Phase.PRODUCTION, Phase.DELIVERY, Phase.END_OF_LIFE)


@dataclass(frozen=True)
class Scenario:
    id: str
    system: SystemModel
    lifetime_hours: float = DEFAULT_LIFETIME_H
    replacement_multiplier: int = 1

    def __post_init__(self):
        if not self.lifetime_hours > 0:
            raise LCIError(f"lifetime must be > 0, got {self.lifetime_hours}")
        if self.replacement_multiplier < 1:
            raise LCIError("replacement_multiplier must be >= 1")

    def fixed_factor(self, hours: float) -> int:
        """How many sets of fixed-phase impacts apply after ``hours`` of use.

        Each lifetime boundary strictly crossed adds ``multiplier - 1`` sets,
        so the default multiplier of 1 never replaces anything.
        """
        if self.replacement_multiplier == 1 or hours <= self.lifetime_hours:
            return 1
        L = self.lifetime_hours
        crossed = math.ceil(hours / L) - 1
        # settle float rounding so boundaries agree with the products k * L
        while (crossed + 1) * L < hours:
            crossed += 1
        while crossed > 0 and crossed * L >= hours:
            crossed -= 1
        return 1 + (self.replacement_multiplier - 1) * crossed


@dataclass(frozen=True)
class AffineImpact:
    """Per-indicator fixed impact by phase and hourly use rate."""

    fixed: Mapping[Phase, Mapping[Indicator, float]]
    rate: Mapping[Indicator, float]

    def fixed_total(self, indicator: Indicator) -> float:
        return math.fsum(self.fixed[ph][indicator] for ph in FIXED_PHASES)


@dataclass(frozen=True)
class SweepSeries:
    scenario: str
    hours: tuple[float, ...]
    values: Mapping[Phase, Mapping[Indicator, tuple[float, ...]]]

    def total(self, indicator: Indicator) -> tuple[float, ...]:
        return tuple(
            math.fsum(self.values[ph][indicator][i] for ph in PHASES) for i in range(len(self.hours))
        )


@dataclass(frozen=True)
class Crossover:
    """Hour where ``x`` and ``y`` totals meet for one indicator.

    ``hours`` is ``None`` when the totals never meet in ``[0, 1e6]`` h;
    ``lower`` names the scenario with lower impact before the crossover
    (or throughout, when there is none).
    """

    indicator: Indicator
    x: str
    y: str
    hours: float | None
    lower: str | None
    status: str

    def swapped(self) -> Crossover:
        return Crossover(self.indicator, self.y, self.x, self.hours, self.lower, self.status)


@dataclass(frozen=True)
class CrossoverReport:
    x: str
    y: str
    entries: Mapping[Indicator, Crossover]
    dominance: Mapping[str, Mapping[Indicator, Mapping[Phase, float | None]]] = field(
        default_factory=dict
    )


def affine_crossover(fixed_x: float, rate_x: float, fixed_y: float, rate_y: float,
                     max_hours: float = MAX_SEARCH_H) -> tuple[float | None, str]:
    """Root of ``(F_x + r_x h) - (F_y + r_y h)`` on ``[0, max_hours]``."""
    d_fixed = fixed_x - fixed_y
    d_rate = rate_x - rate_y
    if d_rate == 0.0:
        return (None, "always_equal") if d_fixed == 0.0 else (None, "parallel")
    h = -d_fixed / d_rate
    if h < 0 or h > max_hours:
        return None, "no_crossing"
    return h, "crossing"


def bisection_crossover(total_x, total_y, lo: float = 0.0, hi: float = MAX_SEARCH_H,
                        tol: float = 1e-3) -> float | None:
    """Independent root finder on the difference of two total-impact callables."""
    f_lo = total_x(lo) - total_y(lo)
    f_hi = total_x(hi) - total_y(hi)
    if f_lo == 0.0:
        return lo
    if f_lo * f_hi > 0:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = total_x(mid) - total_y(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class Engine:
    """Evaluates scenarios against one inventory system and impact method."""

    def __init__(self, system: InventorySystem, method: ImpactMethod):
        self.system = system
        self.method = method
        self._cache: dict[int, tuple[SystemModel, AffineImpact]] = {}

    def impacts(self, demand: DemandVector) -> dict[Indicator, float]:
        g = inventory(self.system, solve_scaling(self.system, demand))
        return dict(characterize(g, self.method).totals)

    def affine(self, scenario: Scenario | SystemModel) -> AffineImpact:
        model = scenario.system if isinstance(scenario, Scenario) else scenario
        key = id(model)
        cached = self._cache.get(key)
        if cached is not None and cached[0] is model:
            return cached[1]
        fixed = {
            Phase.PRODUCTION: self.impacts(model.production),
            Phase.DELIVERY: self.impacts(model.delivery),
            Phase.END_OF_LIFE: self.impacts(model.end_of_life),
        }
        result = AffineImpact(fixed=fixed, rate=self.impacts(model.use_rate))
        self._cache[key] = (model, result)
        return result

    def evaluate(self, scenario: Scenario, hours: float) -> list[PhaseImpact]:
        if not hours >= 0:
            raise LCIError(f"hours must be >= 0, got {hours}")
        aff = self.affine(scenario)
        k = scenario.fixed_factor(hours)
        out = []
        for ph in PHASES:
            if ph is Phase.USE:
                totals = {ind: aff.rate[ind] * hours for ind in INDICATORS}
            else:
                totals = {ind: aff.fixed[ph][ind] * k for ind in INDICATORS}
            out.append(PhaseImpact(ph, totals))
        return out

    def total(self, scenario: Scenario, indicator: Indicator, hours: float) -> float:
        return aggregate_phases(self.evaluate(scenario, hours)).totals[indicator]

    def sweep(self, scenario: Scenario, hour_grid: Sequence[float] = DEFAULT_GRID_H) -> SweepSeries:
        grid = tuple(float(h) for h in hour_grid)
        if not grid:
            raise LCIError("hour grid is empty")
        if any(h < 0 for h in grid):
            raise LCIError("hour grid must be nonnegative")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise LCIError("hour grid must be sorted ascending")
        aff = self.affine(scenario)
        values: dict[Phase, dict[Indicator, tuple[float, ...]]] = {}
        for ph in PHASES:
            values[ph] = {}
            for ind in INDICATORS:
                if ph is Phase.USE:
                    values[ph][ind] = tuple(aff.rate[ind] * h for h in grid)
                else:
                    values[ph][ind] = tuple(
                        aff.fixed[ph][ind] * scenario.fixed_factor(h) for h in grid
                    )
        return SweepSeries(scenario.id, grid, values)

    def phase_dominance_hour(self, scenario: Scenario, indicator: Indicator,
                             against: Phase = Phase.PRODUCTION) -> float | None:
        """Hours after which use impact exceeds the given fixed phase."""
        aff = self.affine(scenario)
        rate = aff.rate[Indicator(indicator)]
        if rate <= 0:
            return None
        return aff.fixed[against][Indicator(indicator)] / rate

    def crossover(self, x: Scenario, y: Scenario, indicator: Indicator) -> Crossover:
        indicator = Indicator(indicator)
        ax, ay = self.affine(x), self.affine(y)
        if x.replacement_multiplier == 1 and y.replacement_multiplier == 1:
            fx, fy = ax.fixed_total(indicator), ay.fixed_total(indicator)
            rx, ry = ax.rate[indicator], ay.rate[indicator]
            h, status = affine_crossover(fx, rx, fy, ry)
            if status == "always_equal":
                lower = None
            elif fx != fy:
                lower = x.id if fx < fy else y.id
            else:
                lower = x.id if rx < ry else y.id
            return Crossover(indicator, x.id, y.id, h, lower, status)
        return self._stepwise_crossover(x, y, indicator)

    def _stepwise_crossover(self, x: Scenario, y: Scenario, indicator: Indicator) -> Crossover:
        # Fixed phases step up at lifetime multiples: piecewise affine.
        ax, ay = self.affine(x), self.affine(y)
        fx, fy = ax.fixed_total(indicator), ay.fixed_total(indicator)
        rx, ry = ax.rate[indicator], ay.rate[indicator]
        bounds = {0.0, MAX_SEARCH_H}
        for sc in (x, y):
            if sc.replacement_multiplier > 1:
                k = 1
                while k * sc.lifetime_hours < MAX_SEARCH_H:
                    bounds.add(k * sc.lifetime_hours)
                    k += 1
        edges = sorted(bounds)

        def diff(h):
            return (fx * x.fixed_factor(h) + rx * h) - (fy * y.fixed_factor(h) + ry * h)

        d0 = diff(0.0)
        lower = None if d0 == 0 else (x.id if d0 < 0 else y.id)
        if d0 == 0 and rx == ry and all(diff(e) == 0 for e in edges):
            return Crossover(indicator, x.id, y.id, None, None, "always_equal")
        for lo, hi in zip(edges, edges[1:]):
            # inside (lo, hi] both fixed factors are constant
            mid = 0.5 * (lo + hi)
            kx, ky = x.fixed_factor(mid), y.fixed_factor(mid)
            d_lo_right = (fx * kx + rx * lo) - (fy * ky + ry * lo)
            d_prev = diff(lo)
            if d_prev != 0 and d_lo_right != 0 and (d_prev > 0) != (d_lo_right > 0):
                return Crossover(indicator, x.id, y.id, lo, lower, "step")
            h, status = affine_crossover(fx * kx, rx, fy * ky, ry, max_hours=MAX_SEARCH_H)
            if status == "crossing" and lo < h <= hi:
                return Crossover(indicator, x.id, y.id, h, lower, "crossing")
        return Crossover(indicator, x.id, y.id, None, lower, "no_crossing")

    def contributions(self, scenario: Scenario | SystemModel) -> dict[str, dict[Indicator, float]]:
        """Production impact split by the model's contributor groups."""
        model = scenario.system if isinstance(scenario, Scenario) else scenario
        return {name: self.impacts(part) for name, part in model.production_parts.items()}

    def input_breakdown(self, process: Process, amount: float = 1.0) -> dict[str, dict[Indicator, float]]:
        """Impact of ``amount`` units of a product split by the producer's direct inputs.

        Direct elementary exchanges of the process itself are reported under
        ``"direct"``; the parts sum to the product's cradle-to-gate impact.
        """
        out: dict[str, dict[Indicator, float]] = {}
        direct: dict[str, float] = {}
        for ex in process.exchanges:
            flow = self.system.flows[ex.flow_id]
            if flow.is_elementary:
                direct[ex.flow_id] = direct.get(ex.flow_id, 0.0) + ex.amount * amount
            elif ex.direction is Direction.INPUT:
                part = self.impacts(DemandVector({ex.flow_id: ex.amount * amount}))
                prev = out.get(ex.flow_id)
                out[ex.flow_id] = part if prev is None else {i: prev[i] + part[i] for i in INDICATORS}
        out["direct"] = dict(characterize(direct, self.method).totals)
        return out

    def crossover_report(self, x: Scenario, y: Scenario) -> CrossoverReport:
        entries = {ind: self.crossover(x, y, ind) for ind in INDICATORS}
        dominance = {
            sc.id: {
                ind: {ph: self.phase_dominance_hour(sc, ind, ph) for ph in FIXED_PHASES}
                for ind in INDICATORS
            }
            for sc in (x, y)
        }
        return CrossoverReport(x.id, y.id, entries, dominance)


@dataclass(frozen=True)
class SensitivityResult:
    scenarios: Mapping[str, Scenario]
    affine: Mapping[str, AffineImpact]
    sweeps: Mapping[str, SweepSeries]
    crossovers: Mapping[tuple[str, str], CrossoverReport]
    fixed_ratios: Mapping[tuple[str, str], Mapping[Indicator, float]]
    setup_ratio: float | None

    def ratio(self, x: str, y: str, indicator: Indicator) -> float:
        return self.fixed_ratios[(x, y)][Indicator(indicator)]


SENSITIVITY_PAIRS = (("A", "B"), ("A'", "B'"), ("A", "B'"), ("A'", "B"), ("A", "A'"), ("B", "B'"))


def run_sensitivity(engine: Engine, scenarios: Mapping[str, Scenario],
                    hour_grid: Sequence[float] = DEFAULT_GRID_H,
                    pairs: Sequence[tuple[str, str]] = SENSITIVITY_PAIRS) -> SensitivityResult:
    """Per-scenario sweeps plus pairwise crossovers and fixed-phase ratios."""
    missing = [s for pair in pairs for s in pair if s not in scenarios]
    if missing:
        raise LCIError(f"sensitivity run lacks scenarios: {', '.join(sorted(set(missing)))}")
    affine = {}
    sweeps = {}
    for sid, sc in scenarios.items():
        try:
            affine[sid] = engine.affine(sc)
            sweeps[sid] = engine.sweep(sc, hour_grid)
        except LCIError as exc:
            raise LCIError(f"scenario {sid!r}: {exc}") from exc
    crossovers = {}
    ratios = {}
    for x, y in pairs:
        crossovers[(x, y)] = engine.crossover_report(scenarios[x], scenarios[y])
        ratios[(x, y)] = {
            ind: _safe_ratio(affine[x].fixed_total(ind), affine[y].fixed_total(ind))
            for ind in INDICATORS
        }
    setup_ratio = None
    if "A" in scenarios and "A'" in scenarios:
        a = scenarios["A"].system.facts.get("qec_setups")
        a2 = scenarios["A'"].system.facts.get("qec_setups")
        if a and a2:
            setup_ratio = a2 / a
    return SensitivityResult(dict(scenarios), affine, sweeps, crossovers, ratios, setup_ratio)


def _safe_ratio(a: float, b: float) -> float:
    return a / b if b != 0 else math.nan
