"""Life-cycle assessment of a fault-tolerant quantum computer versus a supercomputer."""

from .dataset import Dataset, load_and_validate, load_dataset
from .impact import INDICATORS, PHASES, ImpactMethod, Indicator, Phase, characterize
from .lci import DemandVector, Flow, Process, SystemModel, build_system, inventory, solve_scaling
from .scenario import Engine, Scenario

__all__ = [
    "Dataset",
    "DemandVector",
    "Engine",
    "Flow",
    "INDICATORS",
    "ImpactMethod",
    "Indicator",
    "PHASES",
    "Phase",
    "Process",
    "Scenario",
    "SystemModel",
    "build_system",
    "characterize",
    "inventory",
    "load_and_validate",
    "load_dataset",
    "solve_scaling",
]

__version__ = "0.1.0"
