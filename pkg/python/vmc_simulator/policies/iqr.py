"""Adaptive overload threshold from the interquartile range of host history"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..engine import Snapshot
from .base import ConsolidationPolicy, PlanningState, PolicyParams

MIN_SAMPLES = 4
THRESHOLD_FLOOR = 0.5


@dataclass(frozen=True)
class IqrParams(PolicyParams):
    """
    Attributes:
        safety: Multiplier s in T = 1 - s * IQR
        window: Number of most recent utilization samples considered
    """
    safety: float = 1.5
    window: int = 12

    def violations(self, path: str = "policy_params") -> List[str]:
        out = super().violations(path)
        if not self.safety > 0:
            out.append(f"{path}.safety: must be positive, got {self.safety}")
        if not isinstance(self.window, int) or self.window < MIN_SAMPLES:
            out.append(f"{path}.window: must be an integer >= {MIN_SAMPLES}, got {self.window}")
        return out


def iqr_threshold(history: Sequence[float], params: IqrParams = IqrParams(),
                  fallback: float = 0.9) -> float:
    """
    T = clamp(1 - s * (Q3 - Q1), 0.5, 1.0) over the last `window` samples,
    quartiles by linear interpolation. Fewer than 4 samples return fallback.
    """
    samples = list(history)[-params.window:]
    if len(samples) < MIN_SAMPLES:
        return fallback
    q1, q3 = np.quantile(np.asarray(samples, dtype=float), [0.25, 0.75])
    t = 1.0 - params.safety * float(q3 - q1)
    return min(1.0, max(THRESHOLD_FLOOR, t))


class IqrPolicy(ConsolidationPolicy):
    """MBFD pipeline with a per-host dynamic overload threshold."""

    policy_id = "iqr"
    params_cls = IqrParams

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._snapshot: Optional[Snapshot] = None
        self._host_thresholds: Dict[int, float] = {}

    def host_threshold(self, state: PlanningState, h: int) -> float:
        # histories only change between snapshots
        if state.snapshot is not self._snapshot:
            self._snapshot = state.snapshot
            self._host_thresholds = {}
        t = self._host_thresholds.get(h)
        if t is None:
            history = state.snapshot.hosts[h].utilization_history
            t = iqr_threshold(history, self.params, self.thresholds.t_high)
            self._host_thresholds[h] = t
        return t

    def is_overloaded(self, state: PlanningState, h: int) -> bool:
        return state.utilization(h) > self.host_threshold(state, h)

    def overload_limit(self, state: PlanningState, h: int) -> float:
        return self.host_threshold(state, h)

    def destination_cap(self, state: PlanningState, h: int) -> float:
        return self.host_threshold(state, h)
