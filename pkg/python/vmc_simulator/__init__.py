"""
vmc-simulator: deterministic data-center VM consolidation simulator

Architecture:
- model / power - host, VM and power/cooling models
- data/ - PlanetLab and synthetic utilization traces
- engine - time-stepped simulation, event log
- policies/ - MBFD, EcoCloud, GRANITE, LOAD, ACS, IQR
- metrics / results - energy and SLA metrics, aggregation
- sweep / cli - experiment presets, CSV and plot-data emission
"""

__version__ = "0.1.0"

from .engine import MigrationPlan, Move, Simulation, Snapshot, allocate_cpu, run
from .exceptions import (
    ConfigError,
    ContractViolation,
    PlacementError,
    PlanRejectedError,
    PlotDataError,
    SimulatorError,
    TraceFormatError,
)
from .metrics import MetricsRecorder, aggregate
from .model import HostSpec, SimConfig, ThresholdConfig, VmSpec, build_datacenter, load_config, validate
from .policies import make_policy
from .replay import replay_event_log
from .results import AggregateReport, MetricsReport

__all__ = [
    "MigrationPlan",
    "Move",
    "Simulation",
    "Snapshot",
    "allocate_cpu",
    "run",
    "ConfigError",
    "ContractViolation",
    "PlacementError",
    "PlanRejectedError",
    "PlotDataError",
    "SimulatorError",
    "TraceFormatError",
    "MetricsRecorder",
    "aggregate",
    "HostSpec",
    "SimConfig",
    "ThresholdConfig",
    "VmSpec",
    "build_datacenter",
    "load_config",
    "validate",
    "make_policy",
    "replay_event_log",
    "AggregateReport",
    "MetricsReport",
]
