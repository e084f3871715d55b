"""
Learning-automata overload prediction.

Each VM carries an automaton over three actions (utilization goes up,
goes down, stays). The automaton is graded against the observed change
every interval with a linear reward-penalty scheme; its chosen action
predicts the VM's next utilization, and hosts whose predicted load
exceeds t_high are relieved before the overload happens.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set

import numpy as np

from ..engine import MigrationPlan, Snapshot
from .base import ConsolidationPolicy, PlanningState, PolicyParams, bfd_order, select_vms

log = logging.getLogger(__name__)

INCREASE, DECREASE, NO_CHANGE = 0, 1, 2
ACTIONS = ("increase", "decrease", "no-change")
ACTION_SELECTIONS = ("greedy", "sample")


@dataclass(frozen=True)
class LoadParams(PolicyParams):
    """
    Attributes:
        a: Reward step
        b: Penalty step
        deadband: Utilization change regarded as "no change"
        step: Predicted utilization change of an increase/decrease action
        action_selection: "greedy" (most probable action) or "sample"
        underload: Evacuate underloaded hosts through the MBFD pipeline
    """
    a: float = 0.1
    b: float = 0.1
    deadband: float = 0.05
    step: float = 0.1
    action_selection: str = "greedy"
    underload: bool = True

    def violations(self, path: str = "policy_params") -> List[str]:
        out = super().violations(path)
        for name in ("a", "b"):
            value = getattr(self, name)
            if not 0 < value < 1:
                out.append(f"{path}.{name}: must lie in (0, 1), got {value}")
        if not self.deadband >= 0:
            out.append(f"{path}.deadband: must be non-negative, got {self.deadband}")
        if not 0 < self.step <= 1:
            out.append(f"{path}.step: must lie in (0, 1], got {self.step}")
        if self.action_selection not in ACTION_SELECTIONS:
            out.append(
                f"{path}.action_selection: must be one of {ACTION_SELECTIONS}, "
                f"got {self.action_selection!r}"
            )
        if not isinstance(self.underload, bool):
            out.append(f"{path}.underload: expected a boolean, got {self.underload!r}")
        return out


def load_automaton_update(probs: np.ndarray, chosen: int, correct: bool,
                          params: LoadParams = LoadParams()) -> np.ndarray:
    """
    Linear reward-penalty update of a 3-action probability vector.

    Reward:  p_chosen += a (1 - p_chosen), others *= (1 - a)
    Penalty: p_chosen *= (1 - b), others = b / 2 + (1 - b) p_other
    """
    probs = np.asarray(probs, dtype=float)
    out = np.empty_like(probs)
    r = len(probs)
    if correct:
        a = params.a
        out[:] = (1.0 - a) * probs
        out[chosen] = probs[chosen] + a * (1.0 - probs[chosen])
    else:
        b = params.b
        out[:] = b / (r - 1) + (1.0 - b) * probs
        out[chosen] = (1.0 - b) * probs[chosen]
    return out


def observed_action(delta: float, deadband: float) -> int:
    """Action that would have been right for a utilization change of delta."""
    if delta > deadband:
        return INCREASE
    if delta < -deadband:
        return DECREASE
    return NO_CHANGE


@dataclass
class Automaton:
    probs: np.ndarray = field(default_factory=lambda: np.full(3, 1.0 / 3.0))
    last_utilization: Optional[float] = None
    last_action: Optional[int] = None


class LoadPolicy(ConsolidationPolicy):
    """
    Per-VM automata are created lazily and live for the whole run.
    """

    policy_id = "load"
    params_cls = LoadParams

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.automata: Dict[int, Automaton] = {}
        self._predicted: Dict[int, float] = {}

    def choose_action(self, automaton: Automaton) -> int:
        if self.params.action_selection == "sample":
            return int(self.rng.choice(3, p=automaton.probs / automaton.probs.sum()))
        return int(np.argmax(automaton.probs))

    def learn(self, snapshot: Snapshot) -> Dict[int, float]:
        """Grade last interval's predictions and predict next utilization (MIPS) per VM."""
        step = self.params.step
        predicted = {}
        for vm_id in sorted(snapshot.vms):
            vm = snapshot.vms[vm_id]
            u = vm.utilization
            automaton = self.automata.setdefault(vm_id, Automaton())
            if automaton.last_action is not None:
                truth = observed_action(u - automaton.last_utilization, self.params.deadband)
                automaton.probs = load_automaton_update(
                    automaton.probs, automaton.last_action, truth == automaton.last_action,
                    self.params,
                )
            action = self.choose_action(automaton)
            automaton.last_utilization = u
            automaton.last_action = action
            sign = {INCREASE: 1.0, DECREASE: -1.0, NO_CHANGE: 0.0}[action]
            predicted[vm_id] = min(1.0, max(0.0, u + step * sign)) * vm.spec.mips
        return predicted

    def predicted_utilization(self, state: PlanningState, h: int) -> float:
        return sum(self._predicted[v] for v in sorted(state.residents[h])) / state.capacity[h]

    def is_overloaded(self, state: PlanningState, h: int) -> bool:
        return self.predicted_utilization(state, h) > self.thresholds.t_high

    def select_overload(self, state: PlanningState, h: int) -> List[int]:
        capacity = state.capacity[h]
        limit = self.thresholds.t_high
        selected = []
        remaining = sum(self._predicted[v] for v in sorted(state.residents[h]))
        for vm_id in select_vms(state, h, lambda _: True, self.params.vm_selection):
            if remaining / capacity <= limit:
                break
            selected.append(vm_id)
            remaining -= self._predicted[vm_id]
        return selected

    def consolidate(self, snapshot: Snapshot) -> MigrationPlan:
        self._predicted = self.learn(snapshot)
        state = PlanningState(snapshot)
        overloaded: Set[int] = self.handle_overload(state)
        if self.params.underload:
            self.handle_underload(state, overloaded)
        plan = state.plan()
        if plan.moves:
            log.debug("t=%d load proposes %d moves (%d predicted overloads)",
                      snapshot.clock, len(plan), len(overloaded))
        return plan


def load_consolidate(snapshot: Snapshot, policy: LoadPolicy) -> MigrationPlan:
    """One consolidation pass that advances the policy's automata."""
    return policy.consolidate(snapshot)
