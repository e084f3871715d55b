"""
Ant colony system consolidation.

VMs selected from over- and underloaded hosts are lifted off their hosts
and reassigned by a colony of ants. Each ant builds a complete
assignment with the pseudo-random proportional rule over
tau(v, h) * eta(v, h)^beta, eta = 1 / (1 + dP). A solution is scored by
the net power change of the hosts it touches, so emptying a host earns
back its idle power. Non-dominated solutions on (net power change,
migrations, active hosts) are kept in a Pareto archive whose members
reinforce their (VM, host) pairs every iteration.

The ants of one iteration are built side by side over (ants x hosts)
arrays; local pheromone updates of one placement step land together.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..engine import MigrationPlan, Snapshot
from ..power import UTILIZATION_GRID
from .base import ConsolidationPolicy, PlanningState, PolicyParams, bfd_order

log = logging.getLogger(__name__)

Objectives = Tuple[float, int, int]

DEFAULT_MAX_ANTS = 10


@dataclass(frozen=True)
class AcsParams(PolicyParams):
    """
    Attributes:
        ants: Ants per iteration (None: one per selected VM)
        iterations: Colony iterations per consolidation
        q0: Exploitation probability of the pseudo-random proportional rule
        rho: Evaporation rate of both pheromone updates
        tau0: Initial pheromone (None: 1 / (underloaded hosts + 1))
        beta_h: Heuristic exponent
        max_ants: Cap on the per-interval ant count (None: uncapped)
    """
    ants: Optional[int] = None
    iterations: int = 10
    q0: float = 0.9
    rho: float = 0.1
    tau0: Optional[float] = None
    beta_h: float = 2.0
    max_ants: Optional[int] = DEFAULT_MAX_ANTS

    def violations(self, path: str = "policy_params") -> List[str]:
        out = super().violations(path)
        if not 0 <= self.q0 <= 1:
            out.append(f"{path}.q0: must lie in [0, 1], got {self.q0}")
        if not 0 < self.rho < 1:
            out.append(f"{path}.rho: must lie in (0, 1), got {self.rho}")
        for name in ("ants", "max_ants"):
            value = getattr(self, name)
            if value is not None and (not isinstance(value, int) or value < 1):
                out.append(f"{path}.{name}: must be an integer >= 1, got {value}")
        if not isinstance(self.iterations, int) or self.iterations < 1:
            out.append(f"{path}.iterations: must be an integer >= 1, got {self.iterations}")
        if self.tau0 is not None and not self.tau0 > 0:
            out.append(f"{path}.tau0: must be positive, got {self.tau0}")
        if not self.beta_h >= 0:
            out.append(f"{path}.beta_h: must be non-negative, got {self.beta_h}")
        return out

    def ant_count(self, selected: int) -> int:
        n = self.ants or selected
        return min(n, self.max_ants) if self.max_ants else n


def dominates(a: Objectives, b: Objectives) -> bool:
    """a is no worse than b everywhere and strictly better somewhere (minimization)."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


@dataclass(frozen=True)
class AntSolution:
    """Assignment of the selected VMs (host id per VM, in colony order) and its objectives."""
    hosts: Tuple[int, ...]
    columns: Tuple[int, ...]
    objectives: Objectives

    @property
    def delta_power(self) -> float:
        """Net power change in Watts; negative when hosts are emptied."""
        return self.objectives[0]

    @property
    def moves(self) -> int:
        return self.objectives[1]

    @property
    def active_hosts(self) -> int:
        return self.objectives[2]


class ParetoArchive:
    """Set of mutually non-dominated solutions."""

    def __init__(self):
        self.members: List[AntSolution] = []

    def __len__(self) -> int:
        return len(self.members)

    def insert(self, solution: AntSolution) -> bool:
        """Add solution unless an equal or dominating member exists; evict members it dominates."""
        for m in self.members:
            if m.objectives == solution.objectives or dominates(m.objectives, solution.objectives):
                return False
        self.members = [m for m in self.members if not dominates(solution.objectives, m.objectives)]
        self.members.append(solution)
        return True

    def best(self) -> Optional[AntSolution]:
        """Minimum net power change; ties to fewer moves, then the lexicographically smallest assignment."""
        if not self.members:
            return None
        return min(self.members, key=lambda s: (s.objectives[0], s.objectives[1], s.hosts))


class _Colony:
    """
    Numpy view of the lifted planning state for one consolidation.

    Columns are the destination hosts followed by the origins that may
    not receive VMs (overloaded hosts); a VM with no feasible destination
    falls back to its origin column.
    """

    def __init__(self, state: PlanningState, vms: Sequence[int], destinations: Sequence[int],
                 cap: float):
        self.vms = list(vms)
        self.origin = [state.origin[v] for v in self.vms]
        extra = sorted(set(self.origin) - set(destinations))
        self.host_ids = list(destinations) + extra
        n = len(self.host_ids)
        self.destination = np.arange(n) < len(destinations)
        self.cap = cap
        index = {h: j for j, h in enumerate(self.host_ids)}
        self.capacity = np.array([state.capacity[h] for h in self.host_ids], dtype=float)
        self.ram_total = np.array([state.ram_total[h] for h in self.host_ids], dtype=float)
        self.base_demand = np.array([state.demand[h] for h in self.host_ids], dtype=float)
        self.base_ram = np.array([state.ram_used[h] for h in self.host_ids], dtype=float)
        self.base_count = np.array([len(state.residents[h]) for h in self.host_ids], dtype=int)
        self.vm_demand = np.array([state.vm_demand[v] for v in self.vms], dtype=float)
        self.vm_ram = np.array([state.vm_ram[v] for v in self.vms], dtype=float)
        self.origin_column = np.array([index[h] for h in self.origin], dtype=int)
        self.fixed_active = sum(
            1 for h in state.host_ids if h not in index and state.residents[h]
        )

        # every model sampled on the 10% grid; interpolation is exact for
        # tabulated and linear curves
        grid = np.asarray(UTILIZATION_GRID)
        table = np.array([state.models[h].power_array(grid) for h in self.host_ids], dtype=float)
        self._steps = len(grid) - 1
        self._level = table[:, :-1]
        self._slope = np.diff(table, axis=1)
        self._cols = np.arange(n)

        demand = self.base_demand + np.bincount(self.origin_column, weights=self.vm_demand,
                                                minlength=n)
        count = self.base_count + np.bincount(self.origin_column, minlength=n)
        self.power_before = float(np.sum(self.power(demand) * (count > 0)))
        self.tau: Optional[np.ndarray] = None

    def power(self, demand: np.ndarray) -> np.ndarray:
        """Power of every column at the given demand (broadcast over leading axes)."""
        x = np.minimum(1.0, demand / self.capacity) * self._steps
        i = np.minimum(x.astype(int), self._steps - 1)
        return self._level[self._cols, i] + (x - i) * self._slope[self._cols, i]


class AcsPolicy(ConsolidationPolicy):

    policy_id = "acs"
    params_cls = AcsParams

    def select(self, state: PlanningState) -> Tuple[List[int], List[int], int]:
        """Selected VMs, overloaded hosts and the number of underloaded hosts."""
        overloaded = self.detect_overloaded(state)
        selected = []
        for h in overloaded:
            selected.extend(self.select_overload(state, h))
        underloaded = [
            h for h in state.active_hosts()
            if h not in overloaded and self.is_underloaded(state, h)
        ]
        for h in underloaded:
            selected.extend(sorted(state.residents[h]))
        return selected, overloaded, len(underloaded)

    def colony(self, state: PlanningState, vms: Sequence[int], overloaded: Sequence[int]) -> _Colony:
        """Colony over the lifted state; overloaded hosts never receive."""
        excluded = set(overloaded)
        powered = [h for h in state.host_ids if h in state.powered_on and h not in excluded]
        # never more hosts to switch on than VMs to place
        idle = [h for h in state.host_ids if h not in state.powered_on][:len(vms)]
        return _Colony(state, vms, sorted(powered + idle), self.thresholds.t_high)

    def consolidate(self, snapshot: Snapshot) -> MigrationPlan:
        state = PlanningState(snapshot)
        selected, overloaded, n_underloaded = self.select(state)
        if not selected:
            return MigrationPlan()

        vms = bfd_order(state, selected)
        for vm_id in vms:
            state.lift(vm_id)
        colony = self.colony(state, vms, overloaded)
        best = self.search(colony, n_underloaded).best()
        for vm_id, h in zip(vms, best.hosts):
            state.place(vm_id, h)
        plan = state.plan()
        log.debug("t=%d acs: %d selected, %d columns, dP %.1f W, %d moves",
                  snapshot.clock, len(vms), len(colony.host_ids), best.delta_power, len(plan))
        return plan

    def search(self, colony: _Colony, n_underloaded: int) -> ParetoArchive:
        """Run every iteration; colony.tau holds the final pheromone matrix."""
        p = self.params
        tau0 = p.tau0 if p.tau0 is not None else 1.0 / (n_underloaded + 1)
        n_ants = p.ant_count(len(colony.vms))
        colony.tau = np.full((len(colony.vms), len(colony.host_ids)), tau0)
        rows = np.arange(len(colony.vms))
        archive = ParetoArchive()
        for _ in range(p.iterations):
            for solution in self.construct(colony, colony.tau, tau0, n_ants):
                archive.insert(solution)
            floor = archive.best().delta_power
            for member in archive.members:
                deposit = p.rho / (1.0 + member.delta_power - floor)
                cols = np.asarray(member.columns)
                colony.tau[rows, cols] = (1.0 - p.rho) * colony.tau[rows, cols] + deposit
        return archive

    def construct(self, colony: _Colony, tau: np.ndarray, tau0: float,
                  n_ants: int = 1) -> List[AntSolution]:
        """n_ants assignments built together; local pheromone update after every placement step."""
        p = self.params
        n = len(colony.host_ids)
        ants = np.arange(n_ants)
        demand = np.tile(colony.base_demand, (n_ants, 1))
        ram = np.tile(colony.base_ram, (n_ants, 1))
        count = np.tile(colony.base_count, (n_ants, 1))
        power = colony.power(demand) * (count > 0)
        columns = np.empty((n_ants, len(colony.vms)), dtype=int)

        for i in range(len(colony.vms)):
            d, r = colony.vm_demand[i], colony.vm_ram[i]
            new = colony.power(demand + d)
            feasible = (
                colony.destination
                & (ram + r <= colony.ram_total)
                & ((demand + d) / colony.capacity <= colony.cap)
            )
            score = np.where(feasible, tau[i] * (1.0 / (1.0 + new - power)) ** p.beta_h, 0.0)
            cum = np.cumsum(score, axis=1)
            # (0, 1] keeps the draw off zero-score columns
            draw = (1.0 - self.rng.random(n_ants)) * cum[:, -1]
            roulette = np.minimum((cum < draw[:, None]).sum(axis=1), n - 1)
            exploit = self.rng.random(n_ants) < p.q0
            j = np.where(exploit, np.argmax(score, axis=1), roulette)
            # stays where it is
            stuck = ~feasible.any(axis=1)
            j = np.where(stuck, colony.origin_column[i], j)

            columns[:, i] = j
            demand[ants, j] += d
            ram[ants, j] += r
            count[ants, j] += 1
            power[ants, j] = new[ants, j]
            hits = np.bincount(j[~stuck], minlength=n)
            decay = (1.0 - p.rho) ** hits
            tau[i] = decay * tau[i] + (1.0 - decay) * tau0

        delta = power.sum(axis=1) - colony.power_before
        hosts = np.asarray(colony.host_ids)[columns]
        moves = np.count_nonzero(hosts != np.asarray(colony.origin), axis=1)
        active = colony.fixed_active + np.count_nonzero(count, axis=1)
        return [
            AntSolution(
                tuple(int(h) for h in hosts[k]),
                tuple(int(c) for c in columns[k]),
                (float(delta[k]), int(moves[k]), int(active[k])),
            )
            for k in range(n_ants)
        ]


def acs_consolidate(snapshot: Snapshot, params: Optional[AcsParams] = None,
                    seed: int = 0) -> MigrationPlan:
    """One consolidation pass with a fresh colony and policy stream for seed."""
    policy = AcsPolicy(snapshot.thresholds, params, seed, snapshot.cooling)
    return policy.consolidate(snapshot)
