"""Time-stepped data-center simulation engine"""
import json
import logging
from collections import deque
from dataclasses import asdict, dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from .data.feeds import TraceSet
from .exceptions import ConfigError, ContractViolation, PlacementError, PlanRejectedError
from .metrics import MetricsRecorder
from .model import HostState, SimConfig, ThresholdConfig, VmState, validate
from .power import CoolingModel, PowerModel, get_power_model, power
from .results import MetricsReport

log = logging.getLogger(__name__)

EVENT_KINDS = ("placement", "migration", "power-on", "power-off", "sla-violation")


@dataclass(frozen=True)
class Move:
    """One VM migration"""
    vm_id: int
    source: int
    destination: int


@dataclass(frozen=True)
class MigrationPlan:
    """Moves applied atomically at the end of an interval"""
    moves: Tuple[Move, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "moves", tuple(self.moves))

    def __len__(self) -> int:
        return len(self.moves)

    def __iter__(self):
        return iter(self.moves)

    def violations(self, snapshot: "Snapshot") -> List[str]:
        """
        Check the plan's invariants against a snapshot; moves are evaluated
        in order, each seeing the RAM effect of the earlier ones.
        """
        out = []
        ram_used = {h.id: h.ram_used for h in snapshot.hosts.values()}
        location = {v.id: v.host_id for v in snapshot.vms.values()}
        seen = set()
        for move in self.moves:
            reason = _move_violation(move, seen, location, ram_used, snapshot)
            if reason:
                out.append(f"{move}: {reason}")
        return out


def _move_violation(move: Move, seen: set, location: Dict[int, Optional[int]],
                    ram_used: Dict[int, int], snapshot: "Snapshot") -> Optional[str]:
    """Apply one move to the tallies, returning the violated invariant if any."""
    if move.vm_id in seen:
        return "VM appears twice in the plan"
    seen.add(move.vm_id)
    vm = snapshot.vms.get(move.vm_id)
    if vm is None:
        return "unknown VM"
    if move.destination not in snapshot.hosts:
        return f"unknown destination host {move.destination}"
    if move.destination == move.source:
        return "destination equals source"
    if location[move.vm_id] != move.source:
        return f"VM is on host {location[move.vm_id]}, not {move.source}"
    ram = vm.spec.ram
    ram_used[move.source] -= ram
    ram_used[move.destination] += ram
    location[move.vm_id] = move.destination
    if ram_used[move.destination] > snapshot.hosts[move.destination].spec.ram:
        return (
            f"RAM overflow on host {move.destination}: "
            f"{ram_used[move.destination]} MB > {snapshot.hosts[move.destination].spec.ram} MB"
        )
    return None


@dataclass(frozen=True)
class Event:
    """
    Event log entry.

    time is the first interval in which the event's effect holds:
    placements carry 0, migrations decided at the end of interval t carry t + 1.
    """
    time: int
    kind: str
    vm: Optional[int] = None
    host: Optional[int] = None
    dest: Optional[int] = None
    requested: Optional[float] = None
    allocated: Optional[float] = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        return cls(**d)


@dataclass(frozen=True)
class Snapshot:
    """
    Read-only view of the data center handed to policies.

    Valid for the current interval only; policies must not mutate it.
    """
    clock: int
    thresholds: ThresholdConfig
    hosts: Mapping[int, HostState]
    vms: Mapping[int, VmState]
    power_models: Mapping[int, PowerModel]
    cooling: CoolingModel

    @classmethod
    def of(cls, hosts: Iterable[HostState], vms: Iterable[VmState],
           thresholds: ThresholdConfig = ThresholdConfig(),
           cooling: Optional[CoolingModel] = None, clock: int = 0) -> "Snapshot":
        """Build a snapshot from loose states (what-if analysis, tests)."""
        hosts = {h.id: h for h in hosts}
        return cls(
            clock=clock,
            thresholds=thresholds,
            hosts=MappingProxyType(hosts),
            vms=MappingProxyType({v.id: v for v in vms}),
            power_models=MappingProxyType(
                {h.id: get_power_model(h.spec.power_model_id) for h in hosts.values()}
            ),
            cooling=cooling or CoolingModel(),
        )


class CpuAllocation(NamedTuple):
    allocated: Tuple[float, ...]
    violated: bool
    shortfalls: Tuple[float, ...]


def allocate_cpu(host: HostState, demands: Sequence[float]) -> CpuAllocation:
    """
    Allocate a host's MIPS to its residents.

    Under capacity every VM gets its demand; otherwise each VM gets
    demand * capacity / total (proportional clamp) and the host-interval
    is an SLA violation with equal shortfall fractions per VM.
    """
    if not host.powered_on:
        raise ContractViolation(f"allocate_cpu on powered-off host {host.id}")
    total = sum(demands)
    capacity = host.capacity
    if total <= capacity:
        return CpuAllocation(tuple(demands), False, tuple(0.0 for _ in demands))
    allocated = tuple(d * capacity / total for d in demands)
    shortfall = (total - capacity) / total
    return CpuAllocation(allocated, True, tuple(shortfall if d > 0 else 0.0 for d in demands))


class Simulation:
    """
    One simulation run: owns host/VM state, the event log and the metrics
    recorder. Strictly single-threaded and deterministic for fixed
    (config, traces, policy parameters).
    """

    def __init__(self, config: SimConfig, traces: TraceSet, policy=None):
        problems = validate(config)
        if problems:
            raise ConfigError("invalid configuration: " + "; ".join(problems))
        vm_ids = [v.id for v in config.vms]
        if not traces.covers(vm_ids, config.horizon):
            raise ContractViolation(
                f"traces (length {traces.length}, {len(traces)} VMs) do not cover "
                f"{len(vm_ids)} VMs over {config.horizon} intervals"
            )
        if policy is None:
            from .policies import make_policy
            policy = make_policy(config.policy_id, config.policy_params,
                                 config.thresholds, config.seed, config.cooling)

        self.config = config
        self.traces = traces
        self.policy = policy
        self.hosts: Dict[int, HostState] = {
            h.id: HostState(h, utilization_history=deque(maxlen=config.history_length))
            for h in sorted(config.hosts, key=lambda h: h.id)
        }
        self.vms: Dict[int, VmState] = {
            v.id: VmState(v) for v in sorted(config.vms, key=lambda v: v.id)
        }
        self.power_models: Dict[int, PowerModel] = {
            h.id: config.power_model(h.spec.power_model_id) for h in self.hosts.values()
        }
        self.clock = 0
        self.events: List[Event] = []
        self.recorder = MetricsRecorder(config.interval, config.slav_denominator,
                                        config.record_series)
        self._trace = {vm_id: traces.per_vm[vm_id] for vm_id in self.vms}
        self.report: Optional[MetricsReport] = None

    @property
    def migrations(self) -> int:
        return self.recorder.migrations

    def snapshot(self) -> Snapshot:
        return Snapshot(
            clock=self.clock,
            thresholds=self.config.thresholds,
            hosts=MappingProxyType(self.hosts),
            vms=MappingProxyType(self.vms),
            power_models=MappingProxyType(self.power_models),
            cooling=self.config.cooling,
        )

    def run(self) -> MetricsReport:
        """Initial placement once, then every interval of the horizon."""
        log.info("run start: policy=%s hosts=%d vms=%d seed=%d t_low=%.2f",
                 self.config.policy_id, len(self.hosts), len(self.vms),
                 self.config.seed, self.config.thresholds.t_low)
        self._set_demands(0)
        self.place_initial()
        for t in range(self.config.horizon):
            self.step(t)
        self.report = self.recorder.finish(self.config.cooling)
        log.info("run done: policy=%s energy=%.3f kWh migrations=%d slav=%.5f",
                 self.config.policy_id, self.report.energy_computing,
                 self.report.migrations, self.report.slav)
        return self.report

    def place_initial(self) -> None:
        """
        Ask the policy for the initial assignment and apply it.

        Raises:
            PlacementError: If a VM is unassigned or its host lacks RAM headroom
        """
        assignment = self.policy.initial_placement(list(self.vms.values()), self.snapshot())
        for vm_id, vm in self.vms.items():
            host_id = assignment.get(vm_id)
            if host_id is None or host_id not in self.hosts:
                raise PlacementError(vm_id)
            host = self.hosts[host_id]
            if host.ram_used + vm.spec.ram > host.spec.ram:
                raise PlacementError(
                    vm_id, f"host {host_id} lacks RAM headroom for VM {vm_id}"
                )
            if not host.powered_on:
                host.powered_on = True
                self.events.append(Event(0, "power-on", host=host_id))
            host.resident_vms.add(vm_id)
            host.ram_used += vm.spec.ram
            vm.host_id = host_id
            self.events.append(Event(0, "placement", vm=vm_id, host=host_id))
        self._refresh_hosts()

    def step(self, t: int) -> None:
        """Advance one interval: demand, allocation, metrics, consolidation."""
        self.clock = t
        self._set_demands(t)
        self._refresh_hosts()
        for host in self.hosts.values():
            if host.powered_on:
                host.utilization_history.append(host.utilization)
        self._allocate_and_record(t)

        plan = self.policy.consolidate(self.snapshot())
        if plan.moves:
            try:
                self.apply_plan(plan, time=t + 1)
            except PlanRejectedError as e:
                log.warning("interval %d: %s", t, e)
        self._power_off_idle(time=t + 1)

    def apply_plan(self, plan: MigrationPlan, time: Optional[int] = None) -> None:
        """
        Apply every move atomically; sources left empty are powered off.

        Raises:
            PlanRejectedError: If any move breaks the plan invariants; no
                move is applied in that case
        """
        time = self.clock + 1 if time is None else time
        snapshot = self.snapshot()
        ram_used = {h.id: h.ram_used for h in self.hosts.values()}
        location = {v.id: v.host_id for v in self.vms.values()}
        seen = set()
        for move in plan.moves:
            reason = _move_violation(move, seen, location, ram_used, snapshot)
            if reason:
                raise PlanRejectedError(move, reason)

        for move in plan.moves:
            vm = self.vms[move.vm_id]
            src = self.hosts[move.source]
            dst = self.hosts[move.destination]
            src.resident_vms.discard(vm.id)
            src.ram_used -= vm.spec.ram
            if not dst.powered_on:
                dst.powered_on = True
                self.events.append(Event(time, "power-on", host=dst.id))
            dst.resident_vms.add(vm.id)
            dst.ram_used += vm.spec.ram
            vm.host_id = dst.id
            self.events.append(Event(time, "migration", vm=vm.id, host=src.id, dest=dst.id))
        self.recorder.add_migrations(len(plan.moves))
        log.debug("t=%d applied %d migrations", time, len(plan.moves))
        self._power_off_idle(time)
        self._refresh_hosts()

    def _set_demands(self, t: int) -> None:
        for vm_id, vm in self.vms.items():
            vm.demanded_mips = vm.spec.mips * float(self._trace[vm_id][t])

    def _refresh_hosts(self) -> None:
        for host in self.hosts.values():
            demand = sum(self.vms[v].demanded_mips for v in sorted(host.resident_vms))
            host.demand = demand
            host.utilization = demand / host.capacity if host.powered_on else 0.0

    def _allocate_and_record(self, t: int) -> None:
        powers = []
        violations = []
        for host in self.hosts.values():
            if not host.powered_on:
                continue
            residents = sorted(host.resident_vms)
            demands = [self.vms[v].demanded_mips for v in residents]
            alloc = allocate_cpu(host, demands)
            for vm_id, a in zip(residents, alloc.allocated):
                self.vms[vm_id].allocated_mips = a
            if alloc.violated:
                violations.append((host.id, host.demand, host.capacity))
                self.events.append(Event(t, "sla-violation", host=host.id,
                                         requested=host.demand, allocated=host.capacity))
            u = min(1.0, host.utilization)
            powers.append(power(self.power_models[host.id], u))
        self.recorder.record_interval(t, powers, violations)

    def _power_off_idle(self, time: int) -> None:
        for host in self.hosts.values():
            if host.powered_on and not host.resident_vms:
                host.powered_on = False
                host.utilization = 0.0
                host.demand = 0.0
                host.utilization_history.clear()
                self.events.append(Event(time, "power-off", host=host.id))


def run(config: SimConfig, traces: TraceSet, policy=None) -> MetricsReport:
    """Run one simulation to completion and return its report."""
    return Simulation(config, traces, policy).run()


def apply_plan(sim: Simulation, plan: MigrationPlan) -> Simulation:
    """Apply a migration plan to a run between intervals."""
    sim.apply_plan(plan)
    return sim


def write_event_log(events: Iterable[Event], path: Union[str, Path]) -> None:
    """Export events as line-delimited JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        for event in events:
            f.write(json.dumps(event.to_dict(), sort_keys=True))
            f.write("\n")


def read_event_log(path: Union[str, Path]) -> List[Event]:
    """Read a JSON-lines event log."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Event log not found: {path}")
    with open(path) as f:
        return [Event.from_dict(json.loads(line)) for line in f if line.strip()]
