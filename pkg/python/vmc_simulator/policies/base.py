"""
Consolidation policy contract and shared planning machinery.

Every policy fills the same five slots: initial placement, overload
detection, underload detection, VM selection and destination choice.
ConsolidationPolicy implements the power-aware pipeline on top of those
slots; concrete policies override the slots they change.
"""

import logging
from abc import ABC
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from ..engine import MigrationPlan, Move, Snapshot
from ..exceptions import ConfigError
from ..model import ThresholdConfig, VmState
from ..power import CoolingModel, PowerModel
from ..streams import rng_stream

log = logging.getLogger(__name__)

VM_SELECTIONS = ("min-ram", "max-demand")


@dataclass(frozen=True)
class PolicyParams:
    """Parameters shared by every policy."""
    vm_selection: str = "min-ram"

    def violations(self, path: str = "policy_params") -> List[str]:
        out = []
        if self.vm_selection not in VM_SELECTIONS:
            out.append(
                f"{path}.vm_selection: must be one of {VM_SELECTIONS}, got {self.vm_selection!r}"
            )
        return out

    @classmethod
    def from_dict(cls, doc: Optional[Mapping[str, Any]] = None,
                  path: str = "policy_params") -> "PolicyParams":
        """
        Raises:
            ConfigError: On unknown keys or out-of-range values
        """
        doc = dict(doc or {})
        unknown = sorted(set(doc) - {f.name for f in fields(cls)})
        if unknown:
            raise ConfigError(
                "unknown key(s): " + ", ".join(f"{path}.{k}" for k in unknown)
            )
        params = cls(**doc)
        problems = params.violations(path)
        if problems:
            raise ConfigError("; ".join(problems))
        return params

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class PlanningState:
    """
    Scratch copy of host tallies on which a policy evaluates what-if moves.

    Moves are journaled so a partially placed evacuation can be rolled
    back. plan() collapses the journal into one move per VM that ended
    up away from its original host.
    """

    def __init__(self, snapshot: Snapshot, cap: Optional[float] = None):
        self.snapshot = snapshot
        self.cap = snapshot.thresholds.t_high if cap is None else cap
        hosts = snapshot.hosts
        self.host_ids: List[int] = sorted(hosts)
        self.capacity = {h: hosts[h].capacity for h in self.host_ids}
        self.ram_total = {h: hosts[h].spec.ram for h in self.host_ids}
        self.models: Mapping[int, PowerModel] = snapshot.power_models
        self.powered_on: Set[int] = {h for h in self.host_ids if hosts[h].powered_on}
        self.vm_demand = {v.id: v.demanded_mips for v in snapshot.vms.values()}
        self.vm_ram = {v.id: v.spec.ram for v in snapshot.vms.values()}
        self.origin: Dict[int, Optional[int]] = {v.id: v.host_id for v in snapshot.vms.values()}
        self.location: Dict[int, Optional[int]] = dict(self.origin)
        self.residents: Dict[int, Set[int]] = {h: set() for h in self.host_ids}
        self.demand = {h: 0.0 for h in self.host_ids}
        self.ram_used = {h: 0 for h in self.host_ids}
        for vm_id in sorted(self.location):
            h = self.location[vm_id]
            if h is not None:
                self._add(vm_id, h)
        self.received: Set[int] = set()
        self._journal: List[Tuple[int, Optional[int], Optional[int]]] = []
        self._placed_seq: Dict[int, int] = {}

    # --- tallies --------------------------------------------------------

    def _add(self, vm_id: int, h: int) -> None:
        self.residents[h].add(vm_id)
        self.demand[h] += self.vm_demand[vm_id]
        self.ram_used[h] += self.vm_ram[vm_id]

    def _remove(self, vm_id: int, h: int) -> None:
        self.residents[h].discard(vm_id)
        self.demand[h] -= self.vm_demand[vm_id]
        self.ram_used[h] -= self.vm_ram[vm_id]
        if not self.residents[h]:
            self.demand[h] = 0.0

    def is_active(self, h: int) -> bool:
        """Powered on now, or would be after the planned moves."""
        return h in self.powered_on or bool(self.residents[h])

    def active_hosts(self) -> List[int]:
        return [h for h in self.host_ids if self.is_active(h) and self.residents[h]]

    def utilization(self, h: int, extra_mips: float = 0.0) -> float:
        return (self.demand[h] + extra_mips) / self.capacity[h]

    def delta_power(self, h: int, vm_id: int) -> float:
        """Power increase from placing vm_id on h, idle power included for an empty host."""
        d = self.vm_demand[vm_id]
        new = self.models[h].power(min(1.0, self.utilization(h, d)))
        if not self.residents[h]:
            return new
        return new - self.models[h].power(min(1.0, self.utilization(h)))

    def ram_fits(self, h: int, vm_id: int) -> bool:
        return self.ram_used[h] + self.vm_ram[vm_id] <= self.ram_total[h]

    def fits(self, h: int, vm_id: int, cap: Optional[float] = None) -> bool:
        """RAM headroom and post-placement utilization within the cap."""
        cap = self.cap if cap is None else cap
        return self.ram_fits(h, vm_id) and self.utilization(h, self.vm_demand[vm_id]) <= cap

    # --- moves ------------------------------------------------------------

    def place(self, vm_id: int, h: int) -> None:
        """Place an unplaced (or lifted) VM."""
        if self.location[vm_id] is not None:
            raise ValueError(f"VM {vm_id} is already on host {self.location[vm_id]}")
        self._add(vm_id, h)
        self.location[vm_id] = h
        if h != self.origin[vm_id]:
            self.received.add(h)
        self._journal.append((vm_id, None, h))
        self._placed_seq[vm_id] = len(self._journal)

    def lift(self, vm_id: int) -> None:
        """Take a VM off its current host without placing it."""
        h = self.location[vm_id]
        if h is None:
            return
        self._remove(vm_id, h)
        self.location[vm_id] = None
        self._journal.append((vm_id, h, None))

    def move(self, vm_id: int, h: int) -> None:
        self.lift(vm_id)
        self.place(vm_id, h)

    def mark(self) -> int:
        return len(self._journal)

    def rollback(self, mark: int) -> None:
        """Undo every move recorded after mark."""
        while len(self._journal) > mark:
            vm_id, src, dst = self._journal.pop()
            if dst is not None:
                self._remove(vm_id, dst)
            if src is not None:
                self._add(vm_id, src)
            self.location[vm_id] = src
        self.received = {
            dst for vm_id, _, dst in self._journal
            if dst is not None and dst != self.origin[vm_id]
        }

    def assignment(self) -> Dict[int, int]:
        return {v: h for v, h in sorted(self.location.items()) if h is not None}

    def plan(self) -> MigrationPlan:
        """
        Net moves ordered so that every prefix respects destination RAM.

        Moves are taken in placement order; a move whose destination is
        still full waits until an earlier departure frees it. Moves stuck
        in a cycle are dropped and their VMs stay where they are. A host
        the moves would empty is evacuated whole or not at all: when one
        of its moves is dropped, every move off it is withdrawn.
        """
        moved = {
            vm_id: h for vm_id, h in self.location.items()
            if h is not None and self.origin[vm_id] is not None and h != self.origin[vm_id]
        }
        draining = {
            h for h, host in self.snapshot.hosts.items()
            if host.resident_vms and all(v in moved for v in host.resident_vms)
        }
        held: Set[int] = set()
        while True:
            moves, stuck = self._order_moves(
                {v: h for v, h in moved.items() if self.origin[v] not in held}
            )
            withdrawn = ({self.origin[v] for v in stuck} & draining) - held
            if not withdrawn:
                break
            held |= withdrawn
        if stuck:
            log.debug("dropping %d moves with cyclic RAM dependencies", len(stuck))
        if held:
            log.debug("withdrawing evacuation of hosts %s", sorted(held))
        return MigrationPlan(tuple(moves))

    def _order_moves(self, moved: Mapping[int, int]) -> Tuple[List[Move], List[int]]:
        """RAM-feasible move order and the VMs whose moves never become feasible."""
        pending = sorted((self._placed_seq.get(vm_id, 0), vm_id, h) for vm_id, h in moved.items())
        ram = {h: host.ram_used for h, host in self.snapshot.hosts.items()}
        moves: List[Move] = []
        progress = True
        while pending and progress:
            progress = False
            waiting = []
            for seq, vm_id, h in pending:
                r = self.vm_ram[vm_id]
                if ram[h] + r <= self.ram_total[h]:
                    ram[h] += r
                    ram[self.origin[vm_id]] -= r
                    moves.append(Move(vm_id, self.origin[vm_id], h))
                    progress = True
                else:
                    waiting.append((seq, vm_id, h))
            pending = waiting
        return moves, [vm_id for _, vm_id, _ in pending]


def select_vms(state: PlanningState, h: int, still_overloaded, selection: str = "min-ram"
               ) -> List[int]:
    """
    Pick residents of h one at a time until still_overloaded(remaining
    demand) is false.

    min-ram takes the smallest-RAM VM first (shortest migration), max-demand
    the most demanding; ties go to the lower VM id.
    """
    if selection == "max-demand":
        key = lambda v: (-state.vm_demand[v], v)
    else:
        key = lambda v: (state.vm_ram[v], v)
    remaining = state.demand[h]
    chosen = []
    for vm_id in sorted(state.residents[h], key=key):
        if not still_overloaded(remaining):
            break
        chosen.append(vm_id)
        remaining -= state.vm_demand[vm_id]
    return chosen


def bfd_order(state: PlanningState, vm_ids: Iterable[int]) -> List[int]:
    """Best-fit-decreasing order: demanded MIPS descending, then VM id."""
    return sorted(vm_ids, key=lambda v: (-state.vm_demand[v], v))


def mbfd_place(state: PlanningState, vm_id: int, exclude: Iterable[int] = (),
               cap: Optional[float] = None) -> Optional[int]:
    """
    Feasible host with the smallest power increase for vm_id; ties go to
    the lowest host id. Returns None when nothing fits.
    """
    excluded = set(exclude)
    best, best_cost = None, None
    for h in state.host_ids:
        if h in excluded or not state.fits(h, vm_id, cap):
            continue
        cost = state.delta_power(h, vm_id)
        if best_cost is None or cost < best_cost:
            best, best_cost = h, cost
    return best


class ConsolidationPolicy(ABC):
    """
    Power-aware consolidation pipeline.

    Subclasses override is_overloaded / is_underloaded / select_overload /
    placement_cost / find_host as their algorithm requires. The defaults
    implement modified best-fit decreasing with static thresholds.
    """

    policy_id = ""
    params_cls = PolicyParams

    def __init__(self, thresholds: ThresholdConfig = ThresholdConfig(), params=None,
                 seed: int = 0, cooling: Optional[CoolingModel] = None):
        if params is None or isinstance(params, Mapping):
            params = self.params_cls.from_dict(params)
        self.params = params
        self.thresholds = thresholds
        self.seed = seed
        self.cooling = cooling or CoolingModel()
        self.rng = rng_stream(seed, f"policy:{self.policy_id}")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params})"

    # --- slots ------------------------------------------------------------

    def is_overloaded(self, state: PlanningState, h: int) -> bool:
        return state.utilization(h) > self.thresholds.t_high

    def is_underloaded(self, state: PlanningState, h: int) -> bool:
        return state.utilization(h) < self.thresholds.t_low

    def overload_limit(self, state: PlanningState, h: int) -> float:
        """Utilization an overloaded host is relieved down to."""
        return self.thresholds.t_high

    def select_overload(self, state: PlanningState, h: int) -> List[int]:
        limit = self.overload_limit(state, h)
        capacity = state.capacity[h]
        return select_vms(state, h, lambda remaining: remaining / capacity > limit,
                          self.params.vm_selection)

    def destination_cap(self, state: PlanningState, h: int) -> float:
        return self.thresholds.t_high

    def placement_cost(self, state: PlanningState, h: int, vm_id: int) -> float:
        return state.delta_power(h, vm_id)

    def find_host(self, state: PlanningState, vm_id: int, exclude: Iterable[int] = ()
                  ) -> Optional[int]:
        """Feasible host with the minimum placement cost; ties to the lowest id."""
        excluded = set(exclude)
        best, best_cost = None, None
        for h in state.host_ids:
            if h in excluded or not state.fits(h, vm_id, self.destination_cap(state, h)):
                continue
            cost = self.placement_cost(state, h, vm_id)
            if best_cost is None or cost < best_cost:
                best, best_cost = h, cost
        return best

    # --- phases -----------------------------------------------------------

    def initial_placement(self, vms: Sequence[VmState], snapshot: Snapshot) -> Dict[int, int]:
        """
        Best-fit decreasing over all VMs. When no host satisfies the
        utilization cap the VM goes to the cheapest host with RAM headroom;
        a VM left out of the result has no host with enough RAM.
        """
        state = PlanningState(snapshot)
        for vm_id in bfd_order(state, (v.id for v in vms)):
            h = self.find_host(state, vm_id)
            if h is None:
                h = self._ram_only_host(state, vm_id)
            if h is None:
                log.warning("VM %d fits on no host", vm_id)
                continue
            state.place(vm_id, h)
        return state.assignment()

    def _ram_only_host(self, state: PlanningState, vm_id: int) -> Optional[int]:
        candidates = [h for h in state.host_ids if state.ram_fits(h, vm_id)]
        if not candidates:
            return None
        return min(candidates, key=lambda h: (self.placement_cost(state, h, vm_id), h))

    def consolidate(self, snapshot: Snapshot) -> MigrationPlan:
        state = PlanningState(snapshot)
        overloaded = self.handle_overload(state)
        self.handle_underload(state, overloaded)
        plan = state.plan()
        if plan.moves:
            log.debug("t=%d %s proposes %d moves", snapshot.clock, self.policy_id, len(plan))
        return plan

    def detect_overloaded(self, state: PlanningState) -> List[int]:
        return [h for h in state.active_hosts() if self.is_overloaded(state, h)]

    def handle_overload(self, state: PlanningState) -> Set[int]:
        """Relieve overloaded hosts; returns the overloaded set."""
        overloaded = self.detect_overloaded(state)
        selected = []
        for h in overloaded:
            selected.extend(self.select_overload(state, h))
        excluded = set(overloaded)
        for vm_id in bfd_order(state, selected):
            dest = self.find_host(state, vm_id, exclude=excluded)
            if dest is not None:
                state.move(vm_id, dest)
        return excluded

    def handle_underload(self, state: PlanningState, overloaded: Set[int]) -> List[int]:
        """
        Evacuate underloaded hosts in ascending utilization order. A host
        is evacuated only when every resident finds a destination.
        """
        candidates = [
            h for h in state.active_hosts()
            if h not in overloaded and self.is_underloaded(state, h)
        ]
        candidates.sort(key=lambda h: (state.utilization(h), h))
        evacuated: List[int] = []
        for h in candidates:
            if h in state.received or not state.residents[h]:
                continue
            excluded = set(overloaded) | set(evacuated) | {h}
            excluded |= {x for x in state.host_ids if x not in state.powered_on}
            mark = state.mark()
            ok = True
            for vm_id in bfd_order(state, state.residents[h]):
                dest = self.find_host(state, vm_id, exclude=excluded)
                if dest is None:
                    ok = False
                    break
                state.move(vm_id, dest)
            if ok:
                evacuated.append(h)
            else:
                state.rollback(mark)
        return evacuated
