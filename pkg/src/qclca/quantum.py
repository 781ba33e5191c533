"""Parametric model of a fault-tolerant superconducting quantum computer.

Error correction multiplies the per-qubit control setup by the physical
qubits needed per logical qubit (overhead) and divides it by the number of
qubits sharing electronics and cabling (multiplexing).
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

from .lci import (
    DemandVector,
    LCIError,
    SystemModel,
    assembly_burden,
    eol_split,
    transport_tkm,
)

HOURS_PER_WEEK = 168.0

# Roles every quantum configuration must provide, with the count each scales by.
SUBSYSTEM_ROLES = {
    "cryostat": "cryostats",
    "ghs": "ghs_units",
    "compressor": "compressors",
    "control_unit": "control_units",
    "qec_setup": "qec_setups",
    "qec_cables": "qec_setups",
    "nitrogen_tank": "compressors",
}

# Production contribution groups; the error-correction hardware sits in the cryostat.
CONTRIBUTION_GROUP = {
    "cryostat": "cryostat",
    "qec_setup": "cryostat",
    "qec_cables": "cryostat",
    "ghs": "ghs",
    "compressor": "compressor",
    "nitrogen_tank": "compressor",
    "control_unit": "control_unit",
}


@dataclass(frozen=True)
class Subsystem:
    """One hardware unit: the product it is made of, its mass and shipping leg."""

    product: str
    mass_kg: float
    distance_km: float
    origin: str = ""
    recyclable_fraction: float = 0.0


@dataclass(frozen=True)
class QuantumConfig:
    logical_qubits: int = 100
    overhead_factor: float = 7.0
    multiplexing_factor: float = 4.0
    cryostat_count: int | None = 6
    setups_per_cryostat: float | None = None
    control_unit_count: int = 1
    per_setup_cryo_power_W: float = 36.0
    per_setup_rack_power_W: float = 209.0
    compressor_power_kW: float = 10.7
    ghs_power_kW: float = 1.8
    control_unit_power_kW: float = 0.0
    nitrogen_L_per_week_per_compressor: float = 10.0
    nitrogen_density_kg_per_L: float = 0.807
    subsystems: Mapping[str, Subsystem] = field(default_factory=dict)
    grid: str = "electricity_qc"
    desktop_product: str = "electricity_qc"
    desktop_power_kW: float = 0.0
    nitrogen_product: str = "nitrogen_refill"
    freight_product: str = "freight"
    waste_product: str = "waste_metal"
    assembly_coefficients: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.logical_qubits < 1:
            raise LCIError(f"logical_qubits must be >= 1, got {self.logical_qubits}")
        if self.overhead_factor < 1 or self.multiplexing_factor < 1:
            raise LCIError("overhead and multiplexing factors must be >= 1")
        if self.cryostat_count is None and self.setups_per_cryostat is None:
            raise LCIError("either cryostat_count or setups_per_cryostat is required")
        if self.cryostat_count is not None and self.cryostat_count < 1:
            raise LCIError(f"cryostat_count must be >= 1, got {self.cryostat_count}")
        powers = (
            self.per_setup_cryo_power_W,
            self.per_setup_rack_power_W,
            self.compressor_power_kW,
            self.ghs_power_kW,
            self.control_unit_power_kW,
            self.desktop_power_kW,
        )
        if any(p < 0 for p in powers):
            raise LCIError("powers must be >= 0")
        if self.control_unit_count < 0:
            raise LCIError("control_unit_count must be >= 0")


@dataclass(frozen=True)
class SubsystemCounts:
    cryostats: int
    ghs_units: int
    compressors: int
    control_units: int
    qec_setups: int

    @property
    def setups_per_cryostat(self) -> float:
        return self.qec_setups / self.cryostats if self.cryostats else math.nan

    def scaled(self, k: int) -> SubsystemCounts:
        return SubsystemCounts(*(k * getattr(self, n) for n in self.__dataclass_fields__))


@dataclass(frozen=True)
class QuantumPower:
    compressors_kW: float
    ghs_kW: float
    qec_kW: float
    control_units_kW: float

    @property
    def total_kW(self) -> float:
        return self.compressors_kW + self.ghs_kW + self.qec_kW + self.control_units_kW


def qec_setups(logical_qubits: int, overhead: float, multiplexing: float) -> int:
    """Number of replicated per-qubit control setups, ``ceil(L * O / M)``."""
    if logical_qubits < 1 or overhead < 1 or multiplexing < 1:
        raise LCIError(
            f"need L >= 1, O >= 1, M >= 1; got L={logical_qubits}, O={overhead}, M={multiplexing}"
        )
    # round first so 100*7/4 style ratios that land a hair above an integer stay exact
    return math.ceil(round(logical_qubits * overhead / multiplexing, 9))


def cryostats_for_capacity(setups: int, setups_per_cryostat: float) -> int:
    if setups_per_cryostat <= 0:
        raise LCIError("setups_per_cryostat must be > 0")
    return max(1, math.ceil(round(setups / setups_per_cryostat, 9)))


def subsystem_counts(setups: int, cryostat_count: int, control_units: int) -> SubsystemCounts:
    if cryostat_count < 1:
        raise LCIError("at least one cryostat is required")
    return SubsystemCounts(
        cryostats=cryostat_count,
        ghs_units=math.ceil(cryostat_count / 2),
        compressors=cryostat_count,
        control_units=control_units,
        qec_setups=setups,
    )


def counts_for(cfg: QuantumConfig) -> SubsystemCounts:
    setups = qec_setups(cfg.logical_qubits, cfg.overhead_factor, cfg.multiplexing_factor)
    cryostats = cfg.cryostat_count
    if cryostats is None:
        cryostats = cryostats_for_capacity(setups, cfg.setups_per_cryostat)
    return subsystem_counts(setups, cryostats, cfg.control_unit_count)


def quantum_power_kW(counts: SubsystemCounts, cfg: QuantumConfig | None = None) -> QuantumPower:
    cfg = cfg or QuantumConfig()
    per_setup_kW = (cfg.per_setup_cryo_power_W + cfg.per_setup_rack_power_W) / 1000.0
    return QuantumPower(
        compressors_kW=counts.compressors * cfg.compressor_power_kW,
        ghs_kW=counts.ghs_units * cfg.ghs_power_kW,
        qec_kW=counts.qec_setups * per_setup_kW,
        control_units_kW=counts.control_units * cfg.control_unit_power_kW,
    )


def nitrogen_kg_per_hour(counts: SubsystemCounts, cfg: QuantumConfig) -> float:
    litres = counts.compressors * cfg.nitrogen_L_per_week_per_compressor / HOURS_PER_WEEK
    return litres * cfg.nitrogen_density_kg_per_L


def unit_counts(counts: SubsystemCounts) -> dict[str, int]:
    return {role: getattr(counts, attr) for role, attr in SUBSYSTEM_ROLES.items()}


def build_quantum_system(cfg: QuantumConfig, products: frozenset[str] | None = None,
                         name: str = "quantum") -> SystemModel:
    """Assemble the four phase demands of the configured quantum computer.

    ``products`` is the set of intermediate flows the dataset can produce;
    when given, every role the model needs is checked against it.
    """
    missing = sorted(set(SUBSYSTEM_ROLES) - set(cfg.subsystems))
    if missing:
        raise LCIError(f"quantum config lacks subsystems: {', '.join(missing)}")
    if products is not None:
        needed = {s.product for s in cfg.subsystems.values()}
        needed |= {cfg.grid, cfg.desktop_product, cfg.nitrogen_product,
                   cfg.freight_product, cfg.waste_product}
        needed |= set(cfg.assembly_coefficients)
        absent = sorted(needed - set(products))
        if absent:
            raise LCIError(f"dataset has no process for: {', '.join(absent)}")

    counts = counts_for(cfg)
    n_units = unit_counts(counts)

    parts: dict[str, DemandVector] = {}
    delivery_tkm = 0.0
    eol = DemandVector({}, "end_of_life")
    total_mass = 0.0
    for role in SUBSYSTEM_ROLES:
        sub = cfg.subsystems[role]
        n = n_units[role]
        mass = n * sub.mass_kg
        total_mass += mass
        group = CONTRIBUTION_GROUP[role]
        part = DemandVector({sub.product: n}) + assembly_burden(mass, cfg.assembly_coefficients)
        parts[group] = (parts[group] + part) if group in parts else part
        delivery_tkm += transport_tkm(mass, sub.distance_km)
        eol = eol + eol_split(mass, sub.recyclable_fraction, cfg.waste_product)

    production = DemandVector.total(parts.values(), "production")
    parts = {k: v.relabeled("production") for k, v in parts.items()}
    power = quantum_power_kW(counts, cfg)
    use_rate = DemandVector(
        {
            cfg.grid: power.total_kW,
            cfg.nitrogen_product: nitrogen_kg_per_hour(counts, cfg),
        },
        "use",
    ) + DemandVector({cfg.desktop_product: cfg.desktop_power_kW}, "use")

    facts = {
        "qec_setups": counts.qec_setups,
        "cryostats": counts.cryostats,
        "ghs_units": counts.ghs_units,
        "compressors": counts.compressors,
        "control_units": counts.control_units,
        "setups_per_cryostat": counts.setups_per_cryostat,
        "power_kW": power.total_kW,
        "power_compressors_kW": power.compressors_kW,
        "power_ghs_kW": power.ghs_kW,
        "power_qec_kW": power.qec_kW,
        "mass_kg": total_mass,
        "delivery_tkm": delivery_tkm,
        "nitrogen_L_per_h": counts.compressors * cfg.nitrogen_L_per_week_per_compressor / HOURS_PER_WEEK,
    }
    return SystemModel(
        name=name,
        production=production,
        delivery=DemandVector({cfg.freight_product: delivery_tkm}, "delivery"),
        end_of_life=eol,
        use_rate=use_rate,
        production_parts=parts,
        facts=facts,
    )
