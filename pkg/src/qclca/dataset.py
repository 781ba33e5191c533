"""Loading and validation of a dataset bundle.

A bundle is a directory with four tab-separated files, each starting with a
version header line and a typed column header::

    # qclca-flows v1
    id:str	name:str	kind:str	unit:str	compartment:str

Other lines starting with ``#`` are comments. See ``docs/file-formats.md``
for the full schemas.
"""

from __future__ import annotations

import csv
import math
import os
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from .hpc import HpcConfig, PowerSupply, build_hpc_system
from .impact import FACTOR_UNITS, ImpactMethod, Indicator
from .lci import (
    Direction,
    Exchange,
    Flow,
    FlowKind,
    InventorySystem,
    LCIError,
    Process,
    SystemModel,
    build_system,
    validate_dataset,
)
from .quantum import QuantumConfig, Subsystem, build_quantum_system
from .scenario import DEFAULT_LIFETIME_H, Engine, Scenario

FORMAT_VERSION = 1
DATASET_ENV = "QCLCA_DATASET"
REFERENCE_DIR = Path(__file__).parent / "data" / "reference"

FILES = {
    "flows": "flows.tsv",
    "processes": "processes.tsv",
    "factors": "factors.tsv",
    "scenarios": "scenarios.tsv",
}

SCHEMAS = {
    "flows": {"id": "str", "name": "str", "kind": "str", "unit": "str", "compartment": "str"},
    "processes": {
        "process": "str",
        "name": "str",
        "location": "str",
        "flow": "str",
        "amount": "float",
        "direction": "str",
    },
    "factors": {"method": "str", "flow": "str", "indicator": "str", "factor": "float", "unit": "str"},
    "scenarios": {"scenario": "str", "key": "str", "value": "str"},
}


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    file: str
    line: int
    message: str

    def __str__(self) -> str:
        where = f"{self.file}:{self.line}" if self.line else self.file
        return f"{self.level}: {where}: {self.message}"


class DatasetError(LCIError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        errors = [d for d in diagnostics if d.level == "error"]
        super().__init__("\n".join(str(d) for d in errors) or "invalid dataset")


@dataclass
class _Row:
    line: int
    values: dict


def _read_table(path: Path, kind: str, diags: list[Diagnostic]) -> list[_Row]:
    name = path.name
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        diags.append(Diagnostic("error", name, 0, f"cannot read file: {exc}"))
        return []
    lines = text.splitlines()
    expected_header = f"# qclca-{kind} v{FORMAT_VERSION}"
    first = next(((i, ln) for i, ln in enumerate(lines, 1) if ln.strip()), None)
    if first is None:
        diags.append(Diagnostic("error", name, 0, "empty file, missing version header"))
        return []
    if first[1].strip() != expected_header:
        diags.append(
            Diagnostic("error", name, first[0], f"expected version header {expected_header!r}")
        )
        return []

    schema = SCHEMAS[kind]
    columns: list[tuple[str, str]] | None = None
    rows: list[_Row] = []
    for lineno, raw in enumerate(lines, 1):
        if lineno <= first[0] or not raw.strip() or raw.lstrip().startswith("#"):
            continue
        try:
            cells = next(csv.reader([raw], delimiter="\t", quoting=csv.QUOTE_NONE))
        except csv.Error as exc:
            diags.append(Diagnostic("error", name, lineno, f"unreadable line: {exc}"))
            continue
        if columns is None:
            columns = []
            for cell in cells:
                col, _, typ = cell.strip().partition(":")
                columns.append((col, typ or "str"))
            declared = dict(columns)
            if declared != schema:
                diags.append(
                    Diagnostic(
                        "error",
                        name,
                        lineno,
                        f"header {[c for c, _ in columns]} does not match schema "
                        f"{[f'{k}:{v}' for k, v in schema.items()]}",
                    )
                )
                return []
            continue
        if len(cells) != len(columns):
            diags.append(
                Diagnostic("error", name, lineno, f"expected {len(columns)} fields, got {len(cells)}")
            )
            continue
        values = {}
        ok = True
        for (col, typ), cell in zip(columns, cells):
            cell = cell.strip()
            if typ == "float":
                try:
                    v = float(cell)
                except ValueError:
                    diags.append(Diagnostic("error", name, lineno, f"{col}: not a number: {cell!r}"))
                    ok = False
                    continue
                if not math.isfinite(v):
                    diags.append(Diagnostic("error", name, lineno, f"{col}: not finite: {cell!r}"))
                    ok = False
                    continue
                values[col] = v
            else:
                values[col] = cell
        if ok:
            rows.append(_Row(lineno, values))
    if columns is None:
        diags.append(Diagnostic("error", name, 0, "missing column header"))
    return rows


def _parse_flows(rows: list[_Row], diags: list[Diagnostic]) -> dict[str, tuple[Flow, int]]:
    flows: dict[str, tuple[Flow, int]] = {}
    for row in rows:
        v = row.values
        try:
            kind = FlowKind(v["kind"])
        except ValueError:
            diags.append(Diagnostic("error", "flows.tsv", row.line, f"unknown flow kind {v['kind']!r}"))
            continue
        if not v["id"]:
            diags.append(Diagnostic("error", "flows.tsv", row.line, "empty flow id"))
            continue
        if v["id"] in flows:
            diags.append(
                Diagnostic(
                    "error", "flows.tsv", row.line,
                    f"duplicate flow id {v['id']!r} (first at line {flows[v['id']][1]})",
                )
            )
            continue
        compartment = v["compartment"] or None
        if kind is FlowKind.ELEMENTARY and compartment is None:
            diags.append(
                Diagnostic("error", "flows.tsv", row.line, f"elementary flow {v['id']!r} needs a compartment")
            )
            continue
        if kind is FlowKind.INTERMEDIATE and compartment is not None:
            diags.append(
                Diagnostic("error", "flows.tsv", row.line, f"intermediate flow {v['id']!r} has a compartment")
            )
            continue
        flows[v["id"]] = (Flow(v["id"], v["name"], kind, v["unit"], compartment), row.line)
    return flows


def _parse_processes(rows: list[_Row], flows: Mapping[str, tuple[Flow, int]],
                     diags: list[Diagnostic]) -> dict[str, tuple[Process, int]]:
    grouped: dict[str, list[_Row]] = defaultdict(list)
    for row in rows:
        grouped[row.values["process"]].append(row)
    processes: dict[str, tuple[Process, int]] = {}
    producers: dict[str, tuple[str, int]] = {}
    for pid, prows in grouped.items():
        first = prows[0]
        name, location = first.values["name"], first.values["location"]
        exchanges = []
        bad = False
        for row in prows:
            v = row.values
            if (v["name"], v["location"]) != (name, location):
                diags.append(
                    Diagnostic(
                        "error", "processes.tsv", row.line,
                        f"process {pid!r} name/location differ from line {first.line}",
                    )
                )
                bad = True
            if v["flow"] not in flows:
                diags.append(
                    Diagnostic(
                        "error", "processes.tsv", row.line,
                        f"process {pid!r} references unknown flow {v['flow']!r}",
                    )
                )
                bad = True
                continue
            try:
                direction = Direction(v["direction"])
            except ValueError:
                diags.append(
                    Diagnostic("error", "processes.tsv", row.line, f"unknown direction {v['direction']!r}")
                )
                bad = True
                continue
            exchanges.append(Exchange(v["flow"], v["amount"], direction))
        if bad:
            continue
        refs = [
            (ex, row)
            for ex, row in zip(exchanges, prows)
            if ex.direction is Direction.OUTPUT and not flows[ex.flow_id][0].is_elementary
        ]
        if len(refs) != 1:
            diags.append(
                Diagnostic(
                    "error", "processes.tsv", first.line,
                    f"process {pid!r} needs exactly one intermediate output (reference product), "
                    f"found {len(refs)}",
                )
            )
            continue
        ref, ref_row = refs[0]
        if ref.amount != 1.0:
            diags.append(
                Diagnostic(
                    "error", "processes.tsv", ref_row.line,
                    f"process {pid!r} reference output must be 1.0, got {ref.amount}",
                )
            )
            continue
        if ref.flow_id in producers:
            other, other_line = producers[ref.flow_id]
            diags.append(
                Diagnostic(
                    "error", "processes.tsv", ref_row.line,
                    f"duplicate producer for {ref.flow_id!r}: {other!r} (line {other_line}) and {pid!r}",
                )
            )
            continue
        producers[ref.flow_id] = (pid, ref_row.line)
        processes[pid] = (Process(pid, name, location, ref.flow_id, tuple(exchanges)), first.line)
    return processes


def _parse_factors(rows: list[_Row], flows: Mapping[str, tuple[Flow, int]],
                   diags: list[Diagnostic]) -> dict[str, ImpactMethod]:
    tables: dict[str, dict[tuple[str, Indicator], float]] = defaultdict(dict)
    for row in rows:
        v = row.values
        try:
            ind = Indicator(v["indicator"])
        except ValueError:
            diags.append(Diagnostic("error", "factors.tsv", row.line, f"unknown indicator {v['indicator']!r}"))
            continue
        unit_prefix = FACTOR_UNITS[ind][0]
        if not v["unit"].startswith(unit_prefix + "/"):
            diags.append(
                Diagnostic(
                    "error", "factors.tsv", row.line,
                    f"factor unit {v['unit']!r} must be {unit_prefix!r} per flow unit",
                )
            )
            continue
        flow = flows.get(v["flow"])
        if flow is None:
            diags.append(
                Diagnostic(
                    "warning", "factors.tsv", row.line,
                    f"factor references unknown flow {v['flow']!r}; ignored",
                )
            )
            continue
        flow_unit = v["unit"].split("/", 1)[1]
        if flow_unit != flow[0].unit:
            diags.append(
                Diagnostic(
                    "error", "factors.tsv", row.line,
                    f"factor unit {v['unit']!r} does not match flow unit {flow[0].unit!r}",
                )
            )
            continue
        key = (v["flow"], ind)
        if key in tables[v["method"]]:
            diags.append(
                Diagnostic("error", "factors.tsv", row.line, f"duplicate factor for {key[0]!r}/{ind.value}")
            )
            continue
        tables[v["method"]][key] = v["factor"]
    methods = {name: ImpactMethod(name, table) for name, table in sorted(tables.items())}
    for name, method in methods.items():
        uncovered = sorted(
            fid for fid, (fl, _) in flows.items() if fl.is_elementary and fid not in method.flows
        )
        if uncovered:
            diags.append(
                Diagnostic(
                    "warning", "factors.tsv", 0,
                    f"method {name!r} leaves elementary flows uncharacterized: {', '.join(uncovered)}",
                )
            )
    return methods


def _parse_scenarios(rows: list[_Row], diags: list[Diagnostic]) -> dict[str, dict[str, tuple[str, int]]]:
    specs: dict[str, dict[str, tuple[str, int]]] = defaultdict(dict)
    for row in rows:
        v = row.values
        if v["key"] in specs[v["scenario"]]:
            diags.append(
                Diagnostic(
                    "error", "scenarios.tsv", row.line,
                    f"scenario {v['scenario']!r} sets {v['key']!r} twice",
                )
            )
            continue
        specs[v["scenario"]][v["key"]] = (v["value"], row.line)
    return dict(specs)


def _resolve(specs, sid, chain=()) -> dict[str, tuple[str, int]]:
    if sid in chain:
        raise LCIError(f"scenario inheritance cycle: {' -> '.join((*chain, sid))}")
    if sid not in specs:
        raise LCIError(f"unknown scenario {sid!r}")
    own = specs[sid]
    base = own.get("extends")
    merged = dict(_resolve(specs, base[0], (*chain, sid))) if base else {}
    merged.update({k: v for k, v in own.items() if k != "extends"})
    return merged


_QUANTUM_FIELDS = {
    "logical_qubits": int,
    "overhead_factor": float,
    "multiplexing_factor": float,
    "cryostat_count": int,
    "setups_per_cryostat": float,
    "control_unit_count": int,
    "per_setup_cryo_power_W": float,
    "per_setup_rack_power_W": float,
    "compressor_power_kW": float,
    "ghs_power_kW": float,
    "control_unit_power_kW": float,
    "nitrogen_L_per_week_per_compressor": float,
    "nitrogen_density_kg_per_L": float,
    "grid": str,
    "desktop_product": str,
    "desktop_power_kW": float,
    "nitrogen_product": str,
    "freight_product": str,
    "waste_product": str,
}

_HPC_FIELDS = {
    "target_cores": int,
    "cores_per_cpu": int,
    "cpus_per_blade": int,
    "gpus_per_blade": int,
    "cores_per_gpu": float,
    "ram_per_cpu_GB": float,
    "ram_per_gpu_GB": float,
    "blade_power_kW": float,
    "blade_mass_kg": float,
    "distance_km": float,
    "origin": str,
    "cable_mass_per_blade_kg": float,
    "hours_per_year": float,
    "blade_product": str,
    "grid": str,
    "desktop_product": str,
    "desktop_power_kW": float,
    "freight_product": str,
    "waste_product": str,
    "recyclable_fraction": float,
}

_SUBSYSTEM_FIELDS = {
    "product": str,
    "mass_kg": float,
    "distance_km": float,
    "origin": str,
    "recyclable_fraction": float,
}

_COMMON_KEYS = {"kind", "method", "lifetime_hours", "replacement_multiplier", "label"}


def _convert(typ, value: str, key: str):
    if typ in (int, float):
        try:
            float(value)
        except ValueError:
            raise ValueError(f"{key}: not a number: {value!r}") from None
    if typ is int:
        f = float(value)
        if not f.is_integer():
            raise ValueError(f"{key}: expected an integer, got {value!r}")
        return int(f)
    if typ is float:
        f = float(value)
        if not math.isfinite(f):
            raise ValueError(f"{key}: not finite")
        return f
    return value


def quantum_config_from(entries: Mapping[str, tuple[str, int]]) -> QuantumConfig:
    kwargs: dict = {}
    subs: dict[str, dict] = defaultdict(dict)
    assembly: dict[str, float] = {}
    for key, (value, line) in entries.items():
        if key in _COMMON_KEYS:
            continue
        try:
            if key in _QUANTUM_FIELDS:
                if key == "cryostat_count" and value.lower() in ("", "auto"):
                    kwargs[key] = None
                else:
                    kwargs[key] = _convert(_QUANTUM_FIELDS[key], value, key)
            elif key.startswith("assembly."):
                assembly[key.split(".", 1)[1]] = _convert(float, value, key)
            elif key.startswith("subsystem."):
                _, role, attr = key.split(".", 2)
                if attr not in _SUBSYSTEM_FIELDS:
                    raise ValueError(f"unknown subsystem attribute {attr!r}")
                subs[role][attr] = _convert(_SUBSYSTEM_FIELDS[attr], value, key)
            else:
                raise ValueError(f"unknown quantum key {key!r}")
        except ValueError as exc:
            raise LCIError(f"scenarios.tsv:{line}: {exc}") from None
    subsystems = {}
    for role, attrs in subs.items():
        try:
            subsystems[role] = Subsystem(**attrs)
        except TypeError:
            raise LCIError(f"subsystem {role!r} is incomplete: has {sorted(attrs)}") from None
    return QuantumConfig(**kwargs, subsystems=subsystems, assembly_coefficients=assembly)


def hpc_config_from(entries: Mapping[str, tuple[str, int]]) -> HpcConfig:
    kwargs: dict = {}
    psu: dict = {}
    assembly: dict[str, float] = {}
    for key, (value, line) in entries.items():
        if key in _COMMON_KEYS:
            continue
        try:
            if key in _HPC_FIELDS:
                kwargs[key] = _convert(_HPC_FIELDS[key], value, key)
            elif key.startswith("assembly."):
                assembly[key.split(".", 1)[1]] = _convert(float, value, key)
            elif key in ("psu.count", "psu.rating_W", "psu.load_fraction"):
                attr = key.split(".", 1)[1]
                psu[attr] = _convert(int if attr == "count" else float, value, key)
            else:
                raise ValueError(f"unknown hpc key {key!r}")
        except ValueError as exc:
            raise LCIError(f"scenarios.tsv:{line}: {exc}") from None
    return HpcConfig(**kwargs, psu=PowerSupply(**psu), assembly_coefficients=assembly)


@dataclass(frozen=True)
class Dataset:
    """Immutable handle on a loaded, validated bundle."""

    root: Path
    flows: Mapping[str, Flow]
    processes: Mapping[str, Process]
    methods: Mapping[str, ImpactMethod]
    scenario_specs: Mapping[str, Mapping[str, tuple[str, int]]]
    system: InventorySystem
    diagnostics: tuple[Diagnostic, ...] = field(default=())

    @property
    def products(self) -> frozenset[str]:
        return frozenset(self.system.products)

    @property
    def scenario_ids(self) -> list[str]:
        return sorted(s for s in self.scenario_specs if not s.startswith("_"))

    @property
    def default_method(self) -> str:
        return next(iter(self.methods))

    def scenario_entries(self, sid: str) -> dict[str, tuple[str, int]]:
        return _resolve(self.scenario_specs, sid)

    def config(self, sid: str) -> QuantumConfig | HpcConfig:
        entries = self.scenario_entries(sid)
        kind = entries.get("kind", ("", 0))[0]
        if kind == "quantum":
            return quantum_config_from(entries)
        if kind == "hpc":
            return hpc_config_from(entries)
        raise LCIError(f"scenario {sid!r} has unknown kind {kind!r}")

    def model(self, sid: str) -> SystemModel:
        cfg = self.config(sid)
        if isinstance(cfg, QuantumConfig):
            return build_quantum_system(cfg, self.products, name=sid)
        return build_hpc_system(cfg, self.products, name=sid)

    def scenario(self, sid: str, replacement_multiplier: int | None = None) -> Scenario:
        entries = self.scenario_entries(sid)
        lifetime = _convert(float, str(entries.get("lifetime_hours", (DEFAULT_LIFETIME_H, 0))[0]),
                            "lifetime_hours")
        mult = _convert(int, entries.get("replacement_multiplier", ("1", 0))[0], "replacement_multiplier")
        if replacement_multiplier is not None:
            mult = replacement_multiplier
        return Scenario(sid, self.model(sid), lifetime, mult)

    def method_for(self, sid: str | None = None) -> ImpactMethod:
        name = self.default_method
        if sid is not None:
            name = self.scenario_entries(sid).get("method", (name, 0))[0]
        if name not in self.methods:
            raise LCIError(f"unknown impact method {name!r}")
        return self.methods[name]

    def engine(self, method: str | None = None) -> Engine:
        name = method or self.default_method
        if name not in self.methods:
            raise LCIError(f"unknown impact method {name!r}")
        return Engine(self.system, self.methods[name])


def load_and_validate(root: str | os.PathLike | None = None) -> tuple[Dataset | None, list[Diagnostic]]:
    """Load a bundle; never raises for malformed content, returns diagnostics instead."""
    root = Path(root) if root is not None else default_dataset_dir()
    diags: list[Diagnostic] = []
    tables = {}
    for kind, fname in FILES.items():
        path = root / fname
        if not path.is_file():
            diags.append(Diagnostic("error", fname, 0, f"missing file in {root}"))
            tables[kind] = []
            continue
        tables[kind] = _read_table(path, kind, diags)

    flows = _parse_flows(tables["flows"], diags)
    processes = _parse_processes(tables["processes"], flows, diags)
    if not tables["processes"] and not any(d.file == "processes.tsv" for d in diags):
        diags.append(Diagnostic("error", "processes.tsv", 0, "no processes"))
    methods = _parse_factors(tables["factors"], flows, diags)
    if not methods and not any(d.file == "factors.tsv" and d.level == "error" for d in diags):
        diags.append(Diagnostic("error", "factors.tsv", 0, "no characterization factors"))
    specs = _parse_scenarios(tables["scenarios"], diags)

    if any(d.level == "error" for d in diags):
        return None, diags

    flow_list = [f for f, _ in flows.values()]
    proc_list = [p for p, _ in processes.values()]
    for problem in validate_dataset(proc_list, flow_list):
        diags.append(Diagnostic("error", "processes.tsv", 0, problem))
    if any(d.level == "error" for d in diags):
        return None, diags
    try:
        system = build_system(proc_list, flow_list)
    except LCIError as exc:
        diags.append(Diagnostic("error", "processes.tsv", 0, str(exc)))
        return None, diags

    ds = Dataset(
        root=root,
        flows=MappingProxyType({k: f for k, (f, _) in sorted(flows.items())}),
        processes=MappingProxyType({k: p for k, (p, _) in sorted(processes.items())}),
        methods=MappingProxyType(methods),
        scenario_specs=MappingProxyType(specs),
        system=system,
    )
    for sid in ds.scenario_ids:
        try:
            entries = ds.scenario_entries(sid)
            ds.scenario(sid)
            method = entries.get("method")
            if method and method[0] not in methods:
                raise LCIError(f"unknown impact method {method[0]!r}")
        except (LCIError, ValueError, TypeError) as exc:
            line = min((ln for _, ln in ds.scenario_specs.get(sid, {}).values()), default=0)
            diags.append(Diagnostic("error", "scenarios.tsv", line, f"scenario {sid!r}: {exc}"))
    if any(d.level == "error" for d in diags):
        return None, diags
    return Dataset(**{**ds.__dict__, "diagnostics": tuple(diags)}), diags


def load_dataset(root: str | os.PathLike | None = None) -> Dataset:
    ds, diags = load_and_validate(root)
    if ds is None:
        raise DatasetError(diags)
    return ds


def default_dataset_dir() -> Path:
    env = os.environ.get(DATASET_ENV)
    return Path(env) if env else REFERENCE_DIR
