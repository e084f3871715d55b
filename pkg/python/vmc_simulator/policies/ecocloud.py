"""
Probabilistic consolidation driven by Bernoulli trials.

Hosts volunteer for VMs through an assignment function that peaks at a
well-utilized but not full host; under- and overloaded hosts decide
independently whether to migrate.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from ..engine import MigrationPlan, Snapshot
from ..model import VmState
from .base import ConsolidationPolicy, PlanningState, PolicyParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EcoCloudParams(PolicyParams):
    """
    Attributes:
        p: Shape exponent of the assignment function
        alpha: Underload migration scale
        beta: Overload migration scale
        invite_fraction: Fraction of active hosts invited per assignment
        migration_threshold_factor: Scales t_high in the assignment
            function used for migration targets
    """
    p: float = 3.0
    alpha: float = 0.25
    beta: float = 0.25
    invite_fraction: float = 1.0
    migration_threshold_factor: float = 1.0

    def violations(self, path: str = "policy_params") -> List[str]:
        out = super().violations(path)
        if not self.p >= 1:
            out.append(f"{path}.p: must be >= 1, got {self.p}")
        for name in ("alpha", "beta", "invite_fraction", "migration_threshold_factor"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                out.append(f"{path}.{name}: must lie in (0, 1], got {value}")
        return out


def ecocloud_assign_probability(u: float, params: EcoCloudParams, t_high: float) -> float:
    """
    f(u) = u^p (T - u) / Mp on [0, T], 0 elsewhere, with
    Mp = (pT/(p+1))^p * T/(p+1) so the maximum, at u = pT/(p+1), is 1.
    """
    if u <= 0.0 or u >= t_high:
        return 0.0
    p = params.p
    mp = (p * t_high / (p + 1)) ** p * (t_high / (p + 1))
    return min(1.0, u ** p * (t_high - u) / mp)


def underload_migration_probability(u: float, t_low: float, alpha: float) -> float:
    if u >= t_low:
        return 0.0
    return alpha * (1.0 - u / t_low)


def overload_migration_probability(u: float, t_high: float, beta: float) -> float:
    if u <= t_high:
        return 0.0
    # zero-width ramp: u above a full threshold migrates at the full scale
    if t_high >= 1.0:
        return beta
    return beta * min(1.0, (u - t_high) / (1.0 - t_high))


class EcoCloudPolicy(ConsolidationPolicy):

    policy_id = "ecocloud"
    params_cls = EcoCloudParams

    def _trial(self, probability: float) -> bool:
        if probability <= 0.0:
            return False
        return bool(self.rng.random() < probability)

    def _invited(self, hosts: List[int]) -> List[int]:
        frac = self.params.invite_fraction
        if frac >= 1.0 or not hosts:
            return hosts
        k = max(1, math.ceil(frac * len(hosts)))
        picked = self.rng.choice(len(hosts), size=k, replace=False)
        return sorted(hosts[int(i)] for i in picked)

    def _accepters(self, state: PlanningState, vm_id: int, hosts: Sequence[int],
                   t_high: float) -> List[int]:
        """Hosts that pass the feasibility check and their own Bernoulli trial."""
        out = []
        for h in hosts:
            if not state.fits(h, vm_id):
                continue
            f = ecocloud_assign_probability(state.utilization(h), self.params, t_high)
            if self._trial(f):
                out.append(h)
        return out

    def _pick(self, hosts: List[int]) -> Optional[int]:
        if not hosts:
            return None
        return hosts[int(self.rng.integers(len(hosts)))]

    def initial_placement(self, vms: Sequence[VmState], snapshot: Snapshot) -> Dict[int, int]:
        """
        VMs arrive in id order. Active hosts are invited; one accepter is
        chosen at random. With no accepter the lowest-id feasible idle
        host is switched on.
        """
        state = PlanningState(snapshot)
        t_high = self.thresholds.t_high
        for vm in sorted(vms, key=lambda v: v.id):
            active = [h for h in state.host_ids if state.residents[h]]
            h = self._pick(self._accepters(state, vm.id, self._invited(active), t_high))
            if h is None:
                h = next(
                    (x for x in state.host_ids if not state.residents[x] and state.fits(x, vm.id)),
                    None,
                )
            if h is None:
                h = self._ram_only_host(state, vm.id)
            if h is None:
                log.warning("VM %d fits on no host", vm.id)
                continue
            state.place(vm.id, h)
        return state.assignment()

    def _select_overload_vm(self, state: PlanningState, h: int) -> int:
        """Smallest VM whose removal brings u <= t_high, else the largest."""
        limit = self.thresholds.t_high * state.capacity[h]
        residents = sorted(state.residents[h], key=lambda v: (state.vm_demand[v], v))
        for vm_id in residents:
            if state.demand[h] - state.vm_demand[vm_id] <= limit:
                return vm_id
        return residents[-1]

    def consolidate(self, snapshot: Snapshot) -> MigrationPlan:
        state = PlanningState(snapshot)
        t_low, t_high = self.thresholds.t_low, self.thresholds.t_high
        target_t = t_high * self.params.migration_threshold_factor
        hosts = state.active_hosts()
        overloaded = {h for h in hosts if state.utilization(h) > t_high}

        for h in hosts:
            u = state.utilization(h)
            if h in overloaded:
                if not self._trial(overload_migration_probability(u, t_high, self.params.beta)):
                    continue
                vm_id = self._select_overload_vm(state, h)
            elif u < t_low and h not in state.received and state.residents[h]:
                if not self._trial(underload_migration_probability(u, t_low, self.params.alpha)):
                    continue
                residents = sorted(state.residents[h])
                vm_id = residents[int(self.rng.integers(len(residents)))]
            else:
                continue
            targets = [
                x for x in state.active_hosts()
                if x != h and x not in overloaded and x in state.powered_on
            ]
            dest = self._pick(self._accepters(state, vm_id, self._invited(targets), target_t))
            if dest is not None:
                state.move(vm_id, dest)

        plan = state.plan()
        if plan.moves:
            log.debug("t=%d ecocloud proposes %d moves", snapshot.clock, len(plan))
        return plan


def ecocloud_consolidate(snapshot: Snapshot, params: Optional[EcoCloudParams] = None,
                         seed: int = 0) -> MigrationPlan:
    """One consolidation pass with a fresh policy stream for seed."""
    policy = EcoCloudPolicy(snapshot.thresholds, params, seed, snapshot.cooling)
    return policy.consolidate(snapshot)
