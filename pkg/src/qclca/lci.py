"""Process/flow data model and the matrix-based inventory calculation.

The technosphere is square: one producing process per intermediate flow.
Inputs carry a negative sign, the reference output sits on the diagonal as
+1, so for a demand vector ``f`` the scaling vector is ``s = A^-1 f`` and the
elementary inventory is ``g = B s``.
"""

from __future__ import annotations

import enum
import math
import warnings
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
from scipy import linalg

SOLVE_RTOL = 1e-9
MAX_CONDITION = 1e12


class LCIError(ValueError):
    """Raised for malformed datasets and failed inventory solves."""


class ValidationError(LCIError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class SolveError(LCIError):
    pass


class FlowKind(str, enum.Enum):
    ELEMENTARY = "elementary"
    INTERMEDIATE = "intermediate"


class Direction(str, enum.Enum):
    INPUT = "input"
    OUTPUT = "output"


@dataclass(frozen=True)
class Flow:
    id: str
    name: str
    kind: FlowKind
    unit: str
    compartment: str | None = None

    @property
    def is_elementary(self) -> bool:
        return self.kind is FlowKind.ELEMENTARY


@dataclass(frozen=True)
class Exchange:
    flow_id: str
    amount: float
    direction: Direction


@dataclass(frozen=True)
class Process:
    id: str
    name: str
    location: str
    reference_product: str
    exchanges: tuple[Exchange, ...]

    def inputs(self) -> list[Exchange]:
        return [e for e in self.exchanges if e.direction is Direction.INPUT]


@dataclass(frozen=True)
class DemandVector:
    """Sparse demand on intermediate flows, in product units."""

    entries: Mapping[str, float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        clean = {}
        for flow_id, amount in self.entries.items():
            amount = float(amount)
            if not math.isfinite(amount):
                raise LCIError(f"demand for {flow_id!r} is not finite: {amount}")
            if amount != 0.0:
                clean[flow_id] = amount
        object.__setattr__(self, "entries", MappingProxyType(dict(sorted(clean.items()))))

    def __add__(self, other: DemandVector) -> DemandVector:
        merged = dict(self.entries)
        for k, v in other.entries.items():
            merged[k] = merged.get(k, 0.0) + v
        return DemandVector(merged, self.label or other.label)

    def scaled(self, factor: float, label: str | None = None) -> DemandVector:
        return DemandVector(
            {k: v * factor for k, v in self.entries.items()},
            self.label if label is None else label,
        )

    def relabeled(self, label: str) -> DemandVector:
        return DemandVector(self.entries, label)

    @classmethod
    def total(cls, parts: Iterable[DemandVector], label: str = "") -> DemandVector:
        acc = cls({}, label)
        for part in parts:
            acc = acc + part
        return acc.relabeled(label)


def validate_dataset(processes: Iterable[Process], flows: Iterable[Flow]) -> list[str]:
    """Return every referential problem found; an empty list means valid."""
    problems: list[str] = []
    flow_map: dict[str, Flow] = {}
    for fl in flows:
        if fl.id in flow_map:
            problems.append(f"duplicate flow id {fl.id!r}")
        flow_map[fl.id] = fl
        if fl.is_elementary and not fl.compartment:
            problems.append(f"elementary flow {fl.id!r} has no compartment")
        if not fl.is_elementary and fl.compartment:
            problems.append(f"intermediate flow {fl.id!r} must not have a compartment")

    producers: dict[str, str] = {}
    seen_ids: set[str] = set()
    processes = list(processes)
    if not processes:
        problems.append("no processes")
    for proc in processes:
        if proc.id in seen_ids:
            problems.append(f"duplicate process id {proc.id!r}")
        seen_ids.add(proc.id)
        for ex in proc.exchanges:
            if ex.flow_id not in flow_map:
                problems.append(f"process {proc.id!r} references unknown flow {ex.flow_id!r}")
            if not math.isfinite(ex.amount):
                problems.append(f"process {proc.id!r} has non-finite amount for {ex.flow_id!r}")
        ref_outputs = [
            ex
            for ex in proc.exchanges
            if ex.direction is Direction.OUTPUT
            and ex.flow_id in flow_map
            and not flow_map[ex.flow_id].is_elementary
        ]
        if len(ref_outputs) != 1:
            problems.append(
                f"process {proc.id!r} must have exactly one intermediate output, found {len(ref_outputs)}"
            )
        else:
            ref = ref_outputs[0]
            if ref.flow_id != proc.reference_product:
                problems.append(
                    f"process {proc.id!r} outputs {ref.flow_id!r} but declares "
                    f"reference product {proc.reference_product!r}"
                )
            if ref.amount != 1.0:
                problems.append(
                    f"process {proc.id!r} reference output must be 1.0, got {ref.amount}"
                )
        ref_id = proc.reference_product
        if ref_id in producers:
            problems.append(
                f"duplicate producer for {ref_id!r}: {producers[ref_id]!r} and {proc.id!r}"
            )
        else:
            producers[ref_id] = proc.id
        for ex in proc.exchanges:
            fl = flow_map.get(ex.flow_id)
            if fl is not None and not fl.is_elementary and ex.direction is Direction.INPUT:
                if ex.flow_id == ref_id:
                    problems.append(f"process {proc.id!r} consumes its own reference product")

    for fl in flow_map.values():
        if not fl.is_elementary and fl.id not in producers:
            problems.append(f"intermediate flow {fl.id!r} has no producing process")
    return problems


@dataclass(frozen=True)
class InventorySystem:
    """Assembled technosphere (A) and biosphere (B) matrices with index maps.

    Column ``j`` of both matrices is the process producing intermediate flow
    ``products[j]``; row ``k`` of ``B`` is elementary flow ``elementary[k]``.
    """

    technosphere: np.ndarray
    biosphere: np.ndarray
    products: tuple[str, ...]
    processes: tuple[str, ...]
    elementary: tuple[str, ...]
    flows: Mapping[str, Flow]
    _lu: tuple = field(repr=False, compare=False, default=None)

    @property
    def product_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.products)}

    @property
    def elementary_index(self) -> dict[str, int]:
        return {e: i for i, e in enumerate(self.elementary)}

    def demand_array(self, f: DemandVector) -> np.ndarray:
        index = self.product_index
        out = np.zeros(len(self.products))
        for flow_id, amount in f.entries.items():
            if flow_id not in index:
                fl = self.flows.get(flow_id)
                if fl is not None and fl.is_elementary:
                    raise LCIError(f"demand references elementary flow {flow_id!r}")
                raise LCIError(f"demand references unknown product {flow_id!r}")
            out[index[flow_id]] = amount
        return out


def build_system(processes: Iterable[Process], flows: Iterable[Flow]) -> InventorySystem:
    processes = list(processes)
    flows = list(flows)
    problems = validate_dataset(processes, flows)
    if problems:
        raise ValidationError(problems)

    flow_map = {fl.id: fl for fl in flows}
    ordered = sorted(processes, key=lambda p: p.reference_product)
    products = tuple(p.reference_product for p in ordered)
    elementary = tuple(sorted(fl.id for fl in flows if fl.is_elementary))
    p_index = {p: i for i, p in enumerate(products)}
    e_index = {e: i for i, e in enumerate(elementary)}

    n, m = len(products), len(elementary)
    A = np.zeros((n, n))
    B = np.zeros((m, n))
    for j, proc in enumerate(ordered):
        for ex in proc.exchanges:
            if flow_map[ex.flow_id].is_elementary:
                # emissions out and resources in are both recorded as positive amounts
                B[e_index[ex.flow_id], j] += ex.amount
            else:
                sign = 1.0 if ex.direction is Direction.OUTPUT else -1.0
                A[p_index[ex.flow_id], j] += sign * ex.amount

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(A, check_finite=True)
    diag = np.abs(np.diag(lu))
    scale = max(float(np.abs(A).max()), 1.0)
    tiny = np.flatnonzero(diag <= np.finfo(float).eps * scale * n)
    if tiny.size:
        k = int(tiny[0])
        raise SolveError(f"singular technosphere matrix: zero pivot at index {k} ({products[k]!r})")
    cond = np.linalg.cond(A)
    if not math.isfinite(cond) or cond > MAX_CONDITION:
        raise SolveError(f"technosphere matrix is ill-conditioned (condition estimate {cond:.3g})")

    A.setflags(write=False)
    B.setflags(write=False)
    return InventorySystem(
        technosphere=A,
        biosphere=B,
        products=products,
        processes=tuple(p.id for p in ordered),
        elementary=elementary,
        flows=MappingProxyType(flow_map),
        _lu=(lu, piv),
    )


def solve_scaling(system: InventorySystem, f: DemandVector | np.ndarray) -> np.ndarray:
    """Solve ``A s = f`` for the process scaling vector."""
    rhs = f if isinstance(f, np.ndarray) else system.demand_array(f)
    A = system.technosphere
    if rhs.shape[0] != A.shape[0]:
        raise LCIError(f"demand has {rhs.shape[0]} entries, system has {A.shape[0]} products")
    if system._lu is not None:
        s = linalg.lu_solve(system._lu, rhs)
    else:
        s = np.linalg.solve(A, rhs)
    residual = np.linalg.norm(A @ s - rhs)
    bound = SOLVE_RTOL * max(np.linalg.norm(rhs), np.finfo(float).tiny)
    if residual > bound and np.linalg.norm(rhs) > 0:
        raise SolveError(f"solve residual {residual:.3g} exceeds tolerance {bound:.3g}")
    return s


def inventory(system: InventorySystem, s: np.ndarray) -> dict[str, float]:
    """Elementary inventory ``g = B s`` keyed by elementary flow id."""
    s = np.asarray(s, dtype=float)
    if s.shape != (len(system.products),):
        raise LCIError(
            f"scaling vector has shape {s.shape}, expected ({len(system.products)},)"
        )
    g = system.biosphere @ s
    return {flow_id: float(v) for flow_id, v in zip(system.elementary, g)}


def assembly_burden(
    mass_kg: float, coefficients: Mapping[str, float], label: str = "production"
) -> DemandVector:
    """Per-kg assembly exchanges scaled by the mass being assembled."""
    if mass_kg < 0:
        raise LCIError(f"assembly mass must be >= 0, got {mass_kg}")
    return DemandVector({k: v * mass_kg for k, v in coefficients.items()}, label)


def transport_tkm(mass_kg: float, distance_km: float) -> float:
    if mass_kg < 0 or distance_km < 0:
        raise LCIError(f"mass and distance must be >= 0, got {mass_kg} kg, {distance_km} km")
    return mass_kg / 1000.0 * distance_km


def eol_split(
    mass_kg: float, recyclable_fraction: float, waste_process: str
) -> DemandVector:
    """Cut-off end of life: only the non-recyclable share goes to waste treatment."""
    if not 0.0 <= recyclable_fraction <= 1.0:
        raise LCIError(f"recyclable fraction must be in [0, 1], got {recyclable_fraction}")
    if mass_kg < 0:
        raise LCIError(f"end-of-life mass must be >= 0, got {mass_kg}")
    return DemandVector({waste_process: (1.0 - recyclable_fraction) * mass_kg}, "end_of_life")


@dataclass(frozen=True)
class SystemModel:
    """A built life-cycle model.

    ``production``, ``delivery`` and ``end_of_life`` are one-off demands;
    ``use_rate`` is the demand of one hour of continuous operation.
    ``production_parts`` splits the production demand by contributor for
    contribution reports and sums to ``production``.
    """

    name: str
    production: DemandVector
    delivery: DemandVector
    end_of_life: DemandVector
    use_rate: DemandVector
    production_parts: Mapping[str, DemandVector] = field(default_factory=dict)
    facts: Mapping[str, float] = field(default_factory=dict)

    def fixed(self) -> dict[str, DemandVector]:
        return {
            "production": self.production,
            "delivery": self.delivery,
            "end_of_life": self.end_of_life,
        }

    def use(self, hours: float) -> DemandVector:
        return self.use_rate.scaled(hours, "use")
