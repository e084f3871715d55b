"""
Domain model of the simulated data center.

Static specs (HostSpec, VmSpec, ThresholdConfig, SimConfig) are frozen
dataclasses; HostState/VmState are the mutable per-run occupancy records
owned by exactly one Simulation.
"""

import json
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Deque, Dict, List, Optional, Set, Tuple, Union

from .exceptions import ConfigError
from .power import (
    POWER_MODELS,
    CoolingModel,
    PowerModel,
    get_power_model,
    parse_power_tables,
)
from .streams import rng_stream

log = logging.getLogger(__name__)

POLICY_IDS = ("mbfd", "ecocloud", "granite", "load", "acs", "iqr")
SLAV_DENOMINATORS = ("host", "wall")

DEFAULT_INTERVAL_S = 300
DEFAULT_HORIZON = 288
DEFAULT_HISTORY_LENGTH = 12

# Gap between lower and upper threshold used by every scenario preset.
PRESET_THRESHOLD_GAP = 0.4


@dataclass(frozen=True)
class HostSpec:
    """Physical machine capacity."""
    id: int
    mips_per_core: float
    cores: int
    ram: int             # MB
    bandwidth: int       # Mbit/s
    storage: int         # GB
    power_model_id: str

    @property
    def total_mips(self) -> float:
        return self.mips_per_core * self.cores


@dataclass(frozen=True)
class VmSpec:
    """VM capacity request (single core)."""
    id: int
    mips: float
    ram: int             # MB
    bandwidth: int = 100
    storage: int = 1
    cores: int = 1


# (mips_per_core, cores, ram MB, bandwidth Mbit/s, storage GB, power model)
HOST_TYPES: Dict[str, Tuple[float, int, int, int, int, str]] = {
    "hp-g4": (1860.0, 2, 4096, 1000, 1000, "hp-g4"),
    "hp-g5": (2660.0, 2, 4096, 1000, 1000, "hp-g5"),
}

# (mips, ram MB, bandwidth Mbit/s, storage GB)
VM_TYPES: Dict[str, Tuple[float, int, int, int]] = {
    "vm-2500": (2500.0, 870, 100, 1),
    "vm-2000": (2000.0, 1740, 100, 1),
    "vm-1000": (1000.0, 1740, 100, 1),
    "vm-500": (500.0, 613, 100, 1),
}


def make_host(host_id: int, host_type: str) -> HostSpec:
    try:
        mips, cores, ram, bw, storage, model = HOST_TYPES[host_type]
    except KeyError:
        raise ConfigError(f"unknown host type {host_type!r}; known: {sorted(HOST_TYPES)}") from None
    return HostSpec(host_id, mips, cores, ram, bw, storage, model)


def make_vm(vm_id: int, vm_type: str) -> VmSpec:
    try:
        mips, ram, bw, storage = VM_TYPES[vm_type]
    except KeyError:
        raise ConfigError(f"unknown VM type {vm_type!r}; known: {sorted(VM_TYPES)}") from None
    return VmSpec(vm_id, mips, ram, bw, storage)


@dataclass
class HostState:
    """
    Dynamic occupancy of one host.

    utilization is demanded MIPS over total MIPS and may exceed 1; the
    engine clamps allocation, not this signal.
    """
    spec: HostSpec
    resident_vms: Set[int] = field(default_factory=set)
    powered_on: bool = False
    utilization: float = 0.0
    demand: float = 0.0
    ram_used: int = 0
    utilization_history: Deque[float] = field(
        default_factory=lambda: deque(maxlen=DEFAULT_HISTORY_LENGTH)
    )

    @property
    def id(self) -> int:
        return self.spec.id

    @property
    def capacity(self) -> float:
        return self.spec.total_mips

    @property
    def ram_free(self) -> int:
        return self.spec.ram - self.ram_used


@dataclass
class VmState:
    """Trace-driven demand and current placement of one VM."""
    spec: VmSpec
    host_id: Optional[int] = None
    demanded_mips: float = 0.0
    allocated_mips: float = 0.0

    @property
    def id(self) -> int:
        return self.spec.id

    @property
    def utilization(self) -> float:
        """Demanded fraction of the VM's own MIPS."""
        return self.demanded_mips / self.spec.mips if self.spec.mips else 0.0


@dataclass(frozen=True)
class ThresholdConfig:
    """Lower/upper host CPU utilization thresholds."""
    t_low: float = 0.5
    t_high: float = 0.9

    @classmethod
    def preset(cls, t_low: float) -> "ThresholdConfig":
        """Scenario preset: t_high = t_low + 0.4."""
        return cls(t_low, round(t_low + PRESET_THRESHOLD_GAP, 10))

    def violations(self, path: str = "thresholds") -> List[str]:
        out = []
        if not 0 < self.t_low < self.t_high <= 1:
            out.append(
                f"{path}: requires 0 < t_low < t_high <= 1, "
                f"got t_low={self.t_low}, t_high={self.t_high}"
            )
        return out


@dataclass(frozen=True)
class SimConfig:
    """
    Everything one simulation run needs apart from traces.

    power_tables maps power model ids to custom models (or their 11 Watts
    values, or a table file path); hosts refer to them through
    power_model_id, and hp-g4 / hp-g5 entries replace the built-in curves.
    """
    hosts: Tuple[HostSpec, ...]
    vms: Tuple[VmSpec, ...]
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    policy_id: str = "mbfd"
    policy_params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    interval: float = DEFAULT_INTERVAL_S
    horizon: int = DEFAULT_HORIZON
    cooling: CoolingModel = field(default_factory=CoolingModel)
    slav_denominator: str = "host"
    history_length: int = DEFAULT_HISTORY_LENGTH
    record_series: bool = True
    power_tables: Dict[str, PowerModel] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "hosts", tuple(self.hosts))
        object.__setattr__(self, "vms", tuple(self.vms))
        object.__setattr__(self, "power_tables", parse_power_tables(self.power_tables))

    def power_model(self, model_id: str) -> PowerModel:
        return get_power_model(model_id, self.power_tables)

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "SimConfig":
        """
        Build a config from a JSON-style document.

        Host and VM lists accept explicit specs or {"type": ..., "count": n}
        shorthands; ids of shorthand entries continue from the previous entry.

        Raises:
            ConfigError: On unknown keys or malformed entries (path included)
        """
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        _reject_unknown(doc, {f.name for f in fields(cls)}, "")
        kwargs: Dict[str, Any] = {}
        for name, value in doc.items():
            if name == "hosts":
                kwargs[name] = _parse_specs(value, "hosts", HostSpec, make_host)
            elif name == "vms":
                kwargs[name] = _parse_specs(value, "vms", VmSpec, make_vm)
            elif name == "thresholds":
                _reject_unknown(value, {"t_low", "t_high"}, "thresholds")
                kwargs[name] = ThresholdConfig(**value)
            elif name == "cooling":
                _reject_unknown(value, {f.name for f in fields(CoolingModel)}, "cooling")
                kwargs[name] = CoolingModel(**value)
            elif name == "policy_params":
                if not isinstance(value, dict):
                    raise ConfigError("policy_params: expected an object")
                kwargs[name] = dict(value)
            else:
                kwargs[name] = value
        for required in ("hosts", "vms"):
            if required not in kwargs:
                raise ConfigError(f"{required}: missing required key")
        return cls(**kwargs)


def _reject_unknown(doc: Any, known: Set[str], path: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object")
    unknown = sorted(set(doc) - known)
    if unknown:
        prefix = f"{path}." if path else ""
        raise ConfigError(
            "unknown key(s): " + ", ".join(f"{prefix}{k}" for k in unknown)
        )


def _parse_specs(entries, path, spec_cls, factory):
    if not isinstance(entries, list):
        raise ConfigError(f"{path}: expected a list")
    specs = []
    next_id = 0
    spec_fields = {f.name for f in fields(spec_cls)}
    for i, entry in enumerate(entries):
        where = f"{path}[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: expected an object")
        if "type" in entry:
            _reject_unknown(entry, {"type", "count"}, where)
            count = entry.get("count", 1)
            if not isinstance(count, int) or count < 0:
                raise ConfigError(f"{where}.count: expected a non-negative integer")
            for _ in range(count):
                specs.append(factory(next_id, entry["type"]))
                next_id += 1
        else:
            _reject_unknown(entry, spec_fields, where)
            try:
                spec = spec_cls(**entry)
            except TypeError as e:
                raise ConfigError(f"{where}: {e}") from None
            specs.append(spec)
            next_id = max(next_id, spec.id + 1)
    return tuple(specs)


def load_config(path: Union[str, Path]) -> SimConfig:
    """Load a SimConfig from a JSON file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path) as f:
        doc = json.load(f)
    return SimConfig.from_dict(doc)


def validate(config: SimConfig) -> List[str]:
    """
    Collect every invariant violation of a config.

    Returns:
        Human-readable "<path>: <message>" strings; empty iff runnable.
    """
    out: List[str] = []
    out.extend(config.thresholds.violations("thresholds"))

    if not isinstance(config.horizon, int) or config.horizon < 1:
        out.append(f"horizon: must be an integer >= 1, got {config.horizon!r}")
    if not config.interval > 0:
        out.append(f"interval: must be positive, got {config.interval!r}")
    if not isinstance(config.history_length, int) or config.history_length < 4:
        out.append(f"history_length: must be an integer >= 4, got {config.history_length!r}")
    if config.slav_denominator not in SLAV_DENOMINATORS:
        out.append(
            f"slav_denominator: must be one of {SLAV_DENOMINATORS}, "
            f"got {config.slav_denominator!r}"
        )

    for dup, n in sorted(Counter(h.id for h in config.hosts).items()):
        if n > 1:
            out.append(f"hosts: duplicate host id {dup} ({n} occurrences)")
    for dup, n in sorted(Counter(v.id for v in config.vms).items()):
        if n > 1:
            out.append(f"vms: duplicate VM id {dup} ({n} occurrences)")

    for i, h in enumerate(config.hosts):
        where = f"hosts[{i}] (id {h.id})"
        if not h.mips_per_core > 0:
            out.append(f"{where}.mips_per_core: must be positive, got {h.mips_per_core}")
        if not isinstance(h.cores, int) or h.cores < 1:
            out.append(f"{where}.cores: must be an integer >= 1, got {h.cores}")
        if not h.ram > 0:
            out.append(f"{where}.ram: must be positive, got {h.ram}")
        if h.power_model_id not in POWER_MODELS and h.power_model_id not in config.power_tables:
            out.append(f"{where}.power_model_id: unknown power model {h.power_model_id!r}")

    for i, v in enumerate(config.vms):
        where = f"vms[{i}] (id {v.id})"
        if not v.mips > 0:
            out.append(f"{where}.mips: must be positive, got {v.mips}")
        if not v.ram > 0:
            out.append(f"{where}.ram: must be positive, got {v.ram}")
        if v.cores != 1:
            out.append(f"{where}.cores: only single-core VMs are modeled, got {v.cores}")

    if config.policy_id not in POLICY_IDS:
        out.append(f"policy_id: unknown policy {config.policy_id!r}; known: {list(POLICY_IDS)}")
    else:
        from .policies import params_violations
        out.extend(params_violations(config.policy_id, config.policy_params, "policy_params"))
    return out


def build_datacenter(host_count: int, vm_count: int, seed: int
                     ) -> Tuple[Tuple[HostSpec, ...], Tuple[VmSpec, ...]]:
    """
    Hosts alternate G4/G5 by index; VM types are drawn uniformly from the
    seed's "vm-types" stream, so the population depends only on
    (vm_count, seed).
    """
    hosts = tuple(
        make_host(i, "hp-g4" if i % 2 == 0 else "hp-g5") for i in range(host_count)
    )
    type_names = list(VM_TYPES)
    draws = rng_stream(seed, "vm-types").integers(0, len(type_names), size=vm_count)
    vms = tuple(make_vm(i, type_names[int(k)]) for i, k in enumerate(draws))
    return hosts, vms


def vm_count_for_ratio(host_count: int, ratio: float) -> int:
    """VM count for a hosts:VMs ratio of 1:ratio, rounded half up."""
    return int(math.floor(host_count * ratio + 0.5))
