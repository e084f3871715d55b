"""
Holistic (computing + cooling) greedy consolidation.

The MBFD pipeline with cooling on top: a host is overloaded above t_high
or when its CPU temperature passes the threshold, and destinations
minimize the increase of total energy, ΔP * (1 + 1/CoP), among hosts
that stay cool.
"""

from typing import Iterable, List, Optional

from ..engine import MigrationPlan, Snapshot
from ..power import CoolingModel, cpu_temperature
from .base import ConsolidationPolicy, PlanningState, select_vms


class GranitePolicy(ConsolidationPolicy):

    policy_id = "granite"

    def temperature(self, state: PlanningState, h: int, extra_mips: float = 0.0) -> float:
        u = min(1.0, state.utilization(h, extra_mips))
        return cpu_temperature(self.cooling, state.models[h].power(u))

    def is_hot(self, state: PlanningState, h: int) -> bool:
        return self.temperature(state, h) > self.cooling.cpu_temp_threshold

    def is_overloaded(self, state: PlanningState, h: int) -> bool:
        return state.utilization(h) > self.thresholds.t_high or self.is_hot(state, h)

    def select_overload(self, state: PlanningState, h: int) -> List[int]:
        """Shed until the host is both under t_high and cool."""
        capacity = state.capacity[h]
        model = state.models[h]
        threshold = self.cooling.cpu_temp_threshold
        t_high = self.thresholds.t_high

        def still_overloaded(remaining: float) -> bool:
            u = remaining / capacity
            if u > t_high:
                return True
            return cpu_temperature(self.cooling, model.power(min(1.0, u))) > threshold

        return select_vms(state, h, still_overloaded, self.params.vm_selection)

    def placement_cost(self, state: PlanningState, h: int, vm_id: int) -> float:
        return state.delta_power(h, vm_id) * self.cooling.cooling_factor

    def find_host(self, state: PlanningState, vm_id: int, exclude: Iterable[int] = ()
                  ) -> Optional[int]:
        """Cheapest feasible host that stays at or below the temperature threshold."""
        excluded = set(exclude)
        threshold = self.cooling.cpu_temp_threshold
        d = state.vm_demand[vm_id]
        best, best_cost = None, None
        for h in state.host_ids:
            if h in excluded or not state.fits(h, vm_id):
                continue
            if self.temperature(state, h, d) > threshold:
                continue
            cost = self.placement_cost(state, h, vm_id)
            if best_cost is None or cost < best_cost:
                best, best_cost = h, cost
        return best


def granite_consolidate(snapshot: Snapshot, cooling: Optional[CoolingModel] = None) -> MigrationPlan:
    """One consolidation pass with the given (or the snapshot's) cooling model."""
    policy = GranitePolicy(snapshot.thresholds, cooling=cooling or snapshot.cooling)
    return policy.consolidate(snapshot)
