import pytest
from hypothesis import given
from hypothesis import strategies as st

from qclca.hpc import (
    HpcConfig,
    PowerSupply,
    ReferenceMachine,
    annual_energy_kWh,
    blades_for_cores,
    build_hpc_system,
    fleet_totals,
    table21_crosscheck,
)
from qclca.lci import LCIError


def test_blades_for_cores():
    assert blades_for_cores(606_208, 24, 2) == pytest.approx(12_629.33, abs=0.005)
    assert blades_for_cores(606_208, 64, 2) == 4736
    assert blades_for_cores(48, 24, 2) == 1
    with pytest.raises(LCIError):
        blades_for_cores(10, 0, 2)


def test_fleet_totals_modeled():
    cfg = HpcConfig()
    f = fleet_totals(blades_for_cores(606_208, 24, 2), cfg)
    assert f.total_power_kW == pytest.approx(18_312.53, abs=0.005)
    assert f.total_mass_kg == pytest.approx(361_199, abs=0.5)
    assert f.total_cpus == pytest.approx(25_258.67, abs=0.005)
    assert f.total_cores == 606_208


def test_zero_blades():
    f = fleet_totals(0.0, HpcConfig())
    assert (f.total_power_kW, f.total_mass_kg, f.total_cpus, f.total_cores) == (0, 0, 0, 0)


@given(st.integers(1, 10**7), st.integers(1, 128), st.integers(1, 8))
def test_cores_round_trip(cores, per_cpu, per_blade):
    cfg = HpcConfig(cores_per_cpu=per_cpu, cpus_per_blade=per_blade)
    f = fleet_totals(blades_for_cores(cores, per_cpu, per_blade), cfg)
    assert f.total_cores == pytest.approx(cores, rel=1e-12)


@given(st.floats(0, 1e6), st.floats(0.1, 10))
def test_fleet_homogeneous(blades, k):
    cfg = HpcConfig()
    a, b = fleet_totals(blades, cfg), fleet_totals(k * blades, cfg)
    for field in ("total_power_kW", "total_mass_kg", "total_cpus", "total_cores"):
        assert getattr(b, field) == pytest.approx(k * getattr(a, field), rel=1e-12, abs=1e-9)


def test_annual_energy():
    assert annual_energy_kWh(1.45, 8760) == pytest.approx(12_702, abs=1e-9)
    assert annual_energy_kWh(0, 8760) == 0
    assert annual_energy_kWh(4.434, 8760) == pytest.approx(38_842, abs=1)


def test_reference_power_per_blade():
    ref = ReferenceMachine()
    assert ref.total_power_kW / (ref.cabinets * ref.blades_per_cabinet) == pytest.approx(4.434, abs=0.001)


def test_psu_delivered_power_covers_blade():
    assert PowerSupply().delivered_kW == pytest.approx(1.452)


def test_crosscheck_all_cells():
    rows = table21_crosscheck(HpcConfig())
    bad = [(r.cell, r.computed, r.expected) for r in rows if not r.ok]
    assert not bad
    cells = {(r.machine, r.cell): r for r in rows}
    assert cells[("reference", "total_mass_kg")].computed == 74 * 3629 == 268_546
    assert cells[("reference", "total_gpus")].computed == 37_888
    assert cells[("modeled", "total_cpus")].rel_diff <= 0.005
    assert all(r.unit for r in rows)


def test_crosscheck_detects_wrong_input():
    rows = table21_crosscheck(HpcConfig(blade_power_kW=1.6))
    assert not next(r for r in rows if r.cell == "total_power_kW").ok


def test_build_model_linear_in_cores(reference):
    import dataclasses

    cfg = reference.config("B")
    one = build_hpc_system(cfg, reference.products)
    two = build_hpc_system(dataclasses.replace(cfg, target_cores=2 * cfg.target_cores), reference.products)
    for k, v in one.production.entries.items():
        assert two.production.entries[k] == pytest.approx(2 * v, rel=1e-12)


def test_b_prime_blade_reduction(reference):
    b, bp = reference.model("B"), reference.model("B'")
    assert bp.facts["blades"] == 4736
    assert b.facts["blades"] / bp.facts["blades"] == pytest.approx(64 / 24)


def test_delivery_aggregate(reference):
    b = reference.model("B")
    assert b.facts["shipped_mass_kg"] == pytest.approx(380_768, rel=1e-6)
    assert b.facts["delivery_tkm"] == pytest.approx(6_574_899, rel=0.01)


def test_config_validation():
    with pytest.raises(LCIError):
        HpcConfig(cores_per_cpu=0)
    with pytest.raises(LCIError):
        HpcConfig(blade_power_kW=0)
