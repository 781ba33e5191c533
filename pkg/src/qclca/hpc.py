"""Classical supercomputer model scaled by CPU-core count.

Blade counts stay fractional: an attributional inventory scales linearly,
so 606,208 cores on 48-core blades is 12,629.33 blades, not 12,630.
"""

from __future__ import annotations

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

CROSSCHECK_RTOL = 0.005


@dataclass(frozen=True)
class PowerSupply:
    count: int = 2
    rating_W: float = 1100.0
    load_fraction: float = 0.66

    @property
    def delivered_kW(self) -> float:
        return self.count * self.rating_W * self.load_fraction / 1000.0


@dataclass(frozen=True)
class HpcConfig:
    target_cores: int = 606_208
    cores_per_cpu: int = 24
    cpus_per_blade: int = 2
    gpus_per_blade: int = 2
    cores_per_gpu: float = 1792
    ram_per_cpu_GB: float = 768
    ram_per_gpu_GB: float = 8
    blade_power_kW: float = 1.45
    blade_mass_kg: float = 28.6
    psu: PowerSupply = PowerSupply()
    distance_km: float = 0.0
    origin: str = "CN"
    cable_mass_per_blade_kg: float = 0.0
    hours_per_year: float = 8760.0
    blade_product: str = "compute_blade"
    grid: str = "electricity_qc"
    desktop_product: str = "electricity_qc"
    desktop_power_kW: float = 0.0
    freight_product: str = "freight"
    waste_product: str = "waste_electronics"
    recyclable_fraction: float = 0.0
    assembly_coefficients: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if min(self.target_cores, self.cores_per_cpu, self.cpus_per_blade) < 1:
            raise LCIError("core and CPU counts must be >= 1")
        if self.blade_power_kW <= 0 or self.blade_mass_kg <= 0:
            raise LCIError("blade power and mass must be > 0")
        if self.distance_km < 0 or self.cable_mass_per_blade_kg < 0:
            raise LCIError("distance and cable mass must be >= 0")


@dataclass(frozen=True)
class ReferenceMachine:
    """A published supercomputer described at cabinet level."""

    name: str = "Frontier HPE Cray EX235a"
    total_power_kW: float = 21_000.0
    target_cores: int = 606_208
    cores_per_cpu: int = 64
    cpus_per_blade: int = 2
    gpus_per_blade: int = 8
    total_gpu_plus_cpu_cores: float = 8_699_904
    ram_per_cpu_GB: float = 512
    ram_per_gpu_GB: float = 128
    blades_per_cabinet: int = 64
    cabinets: int = 74
    cabinet_mass_kg: float = 3_629.0


@dataclass(frozen=True)
class BladeFleet:
    blades: float
    total_power_kW: float
    total_mass_kg: float
    total_cpus: float
    total_cores: float
    total_gpus: float = 0.0


def blades_for_cores(target_cores: float, cores_per_cpu: float, cpus_per_blade: float) -> float:
    divisor = cores_per_cpu * cpus_per_blade
    if divisor <= 0:
        raise LCIError("cores_per_cpu * cpus_per_blade must be > 0")
    return target_cores / divisor


def fleet_totals(blades: float, cfg: HpcConfig) -> BladeFleet:
    if blades < 0:
        raise LCIError(f"blade count must be >= 0, got {blades}")
    cpus = blades * cfg.cpus_per_blade
    return BladeFleet(
        blades=blades,
        total_power_kW=blades * cfg.blade_power_kW,
        total_mass_kg=blades * cfg.blade_mass_kg,
        total_cpus=cpus,
        total_cores=cpus * cfg.cores_per_cpu,
        total_gpus=blades * cfg.gpus_per_blade,
    )


def annual_energy_kWh(power_kW: float, hours_per_year: float = 8760.0) -> float:
    if power_kW < 0 or hours_per_year < 0:
        raise LCIError("power and hours must be >= 0")
    return power_kW * hours_per_year


@dataclass(frozen=True)
class CrosscheckRow:
    machine: str
    cell: str
    computed: float
    expected: float
    unit: str = ""
    printed_step: float = 0.0  # resolution the expected value was printed at

    @property
    def rounds_to_expected(self) -> bool:
        return self.printed_step > 0 and abs(self.computed - self.expected) <= self.printed_step / 2

    @property
    def rel_diff(self) -> float:
        if self.expected == 0:
            return abs(self.computed)
        return abs(self.computed - self.expected) / abs(self.expected)

    @property
    def ok(self) -> bool:
        return self.rel_diff <= CROSSCHECK_RTOL or self.rounds_to_expected


# Starred (calculated) cells of the blade-vs-reference comparison table.
MODELED_EXPECTED = {
    "total_power_kW": 18_312.53,
    "total_cpus": 25_258.67,
    "total_gpus": 25_258.67,
    "compute_nodes": 25_258.67,
    "total_cpu_cores": 606_208,
    "total_gpu_cores": 45_263_530.67,
    "combined_cpu_gpu_cores": 45_869_738.67,
    "total_blades": 12_629.33,
    "total_ram_cpu_GB": 19_398_656,
    "total_ram_gpu_GB": 202_069.33,
    "total_mass_kg": 361_199,
}

REFERENCE_EXPECTED = {
    "power_per_blade_kW": 4.43,
    "compute_nodes_per_cabinet": 128,
    "cores_per_gpu": 213.62,
    "total_cpus": 9_472,
    "total_gpus": 37_888,
    "compute_nodes": 9_472,
    "total_cpu_cores": 606_208,
    "total_gpu_cores": 8_093_696,
    "total_blades": 4_736,
    "total_ram_cpu_GB": 4_849_664,
    "total_ram_gpu_GB": 4_849_664,
    "mass_per_blade_kg": 57,
    "total_mass_kg": 268_546,
}

COMPARISON_EXPECTED = {
    "extra_compute_nodes_pct": 167,
    "extra_mass_pct": 35,
    "lower_power_pct": 13,
}

# Cells printed as whole numbers; a computed value that rounds to them agrees.
PRINTED_STEP = {
    "mass_per_blade_kg": 1.0,
    "extra_compute_nodes_pct": 1.0,
    "extra_mass_pct": 1.0,
    "lower_power_pct": 1.0,
}

UNITS = {
    "total_power_kW": "kW",
    "power_per_blade_kW": "kW",
    "total_mass_kg": "kg",
    "mass_per_blade_kg": "kg",
    "total_ram_cpu_GB": "GB",
    "total_ram_gpu_GB": "GB",
    "extra_compute_nodes_pct": "%",
    "extra_mass_pct": "%",
    "lower_power_pct": "%",
}


def table21_crosscheck(
    modeled: HpcConfig, reference: ReferenceMachine | None = None
) -> list[CrosscheckRow]:
    """Recompute every calculated cell of the blade comparison table."""
    reference = reference or ReferenceMachine()
    blades = blades_for_cores(modeled.target_cores, modeled.cores_per_cpu, modeled.cpus_per_blade)
    fleet = fleet_totals(blades, modeled)
    gpu_cores = fleet.total_gpus * modeled.cores_per_gpu
    m = {
        "total_power_kW": fleet.total_power_kW,
        "total_cpus": fleet.total_cpus,
        "total_gpus": fleet.total_gpus,
        "compute_nodes": fleet.total_cpus,
        "total_cpu_cores": fleet.total_cores,
        "total_gpu_cores": gpu_cores,
        "combined_cpu_gpu_cores": fleet.total_cores + gpu_cores,
        "total_blades": fleet.blades,
        "total_ram_cpu_GB": fleet.total_cpus * modeled.ram_per_cpu_GB,
        "total_ram_gpu_GB": fleet.total_gpus * modeled.ram_per_gpu_GB,
        "total_mass_kg": fleet.total_mass_kg,
    }

    ref_blades = reference.cabinets * reference.blades_per_cabinet
    ref_from_cores = blades_for_cores(
        reference.target_cores, reference.cores_per_cpu, reference.cpus_per_blade
    )
    if abs(ref_blades - ref_from_cores) > 1e-9:
        raise LCIError(
            f"reference cabinet layout gives {ref_blades} blades but core count implies {ref_from_cores}"
        )
    ref_cpus = ref_blades * reference.cpus_per_blade
    ref_gpus = ref_blades * reference.gpus_per_blade
    ref_mass = reference.cabinets * reference.cabinet_mass_kg
    ref_cores = ref_cpus * reference.cores_per_cpu
    ref_gpu_cores = reference.total_gpu_plus_cpu_cores - ref_cores
    r = {
        "power_per_blade_kW": reference.total_power_kW / ref_blades,
        "compute_nodes_per_cabinet": reference.blades_per_cabinet * reference.cpus_per_blade,
        "cores_per_gpu": ref_gpu_cores / ref_gpus,
        "total_cpus": ref_cpus,
        "total_gpus": ref_gpus,
        "compute_nodes": ref_cpus,
        "total_cpu_cores": ref_cores,
        "total_gpu_cores": ref_gpu_cores,
        "total_blades": ref_blades,
        "total_ram_cpu_GB": ref_cpus * reference.ram_per_cpu_GB,
        "total_ram_gpu_GB": ref_gpus * reference.ram_per_gpu_GB,
        "mass_per_blade_kg": ref_mass / ref_blades,
        "total_mass_kg": ref_mass,
    }
    c = {
        "extra_compute_nodes_pct": 100 * (m["compute_nodes"] / r["compute_nodes"] - 1),
        "extra_mass_pct": 100 * (m["total_mass_kg"] / r["total_mass_kg"] - 1),
        "lower_power_pct": 100 * (1 - m["total_power_kW"] / reference.total_power_kW),
    }

    rows = []
    for machine, computed, expected in (("modeled", m, MODELED_EXPECTED),
                                        ("reference", r, REFERENCE_EXPECTED),
                                        ("comparison", c, COMPARISON_EXPECTED)):
        rows += [CrosscheckRow(machine, k, computed[k], v, UNITS.get(k, "count"), PRINTED_STEP.get(k, 0.0))
                 for k, v in expected.items()]
    return rows


def build_hpc_system(cfg: HpcConfig, products: frozenset[str] | None = None,
                     name: str = "hpc") -> SystemModel:
    needed = {cfg.blade_product, cfg.grid, cfg.desktop_product, cfg.freight_product,
              cfg.waste_product, *cfg.assembly_coefficients}
    if products is not None:
        absent = sorted(needed - set(products))
        if absent:
            raise LCIError(f"dataset has no process for: {', '.join(absent)}")

    blades = blades_for_cores(cfg.target_cores, cfg.cores_per_cpu, cfg.cpus_per_blade)
    fleet = fleet_totals(blades, cfg)
    cable_mass = blades * cfg.cable_mass_per_blade_kg
    shipped = fleet.total_mass_kg + cable_mass
    tkm = transport_tkm(shipped, cfg.distance_km)

    blades_part = DemandVector({cfg.blade_product: blades}, "production")
    assembly_part = assembly_burden(fleet.total_mass_kg, cfg.assembly_coefficients)
    production = DemandVector.total([blades_part, assembly_part], "production")
    use_rate = DemandVector({cfg.grid: fleet.total_power_kW}, "use") + DemandVector(
        {cfg.desktop_product: cfg.desktop_power_kW}, "use"
    )
    facts = {
        "blades": blades,
        "power_kW": fleet.total_power_kW,
        "mass_kg": fleet.total_mass_kg,
        "cable_mass_kg": cable_mass,
        "shipped_mass_kg": shipped,
        "delivery_tkm": tkm,
        "total_cpus": fleet.total_cpus,
        "total_cores": fleet.total_cores,
        "annual_energy_kWh_per_blade": annual_energy_kWh(cfg.blade_power_kW, cfg.hours_per_year),
    }
    return SystemModel(
        name=name,
        production=production,
        delivery=DemandVector({cfg.freight_product: tkm}, "delivery"),
        end_of_life=eol_split(fleet.total_mass_kg, cfg.recyclable_fraction, cfg.waste_product),
        use_rate=use_rate,
        production_parts={"compute_blade": blades_part, "assembly": assembly_part},
        facts=facts,
    )
