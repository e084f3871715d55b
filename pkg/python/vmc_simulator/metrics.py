"""
Energy and SLA metrics.

Pure functions over engine samples plus the streaming recorder the
engine feeds once per interval.
"""

import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ContractViolation
from .power import CoolingModel, JOULES_PER_KWH, total_energy
from .results import (
    AggregateReport,
    IntervalSample,
    MetricSummary,
    MetricsReport,
    REPORT_METRICS,
)


def slav(violation_events: int, active_host_intervals: int) -> float:
    """
    Fraction of active host-intervals with a CPU shortfall.

    Returns 0 when there were no active host-intervals.
    """
    if active_host_intervals == 0:
        return 0.0
    if violation_events > active_host_intervals:
        raise ContractViolation(
            f"{violation_events} violation events exceed "
            f"{active_host_intervals} active host-intervals"
        )
    return violation_events / active_host_intervals


def avg_slv(shortfalls: Iterable[Tuple[float, float]]) -> float:
    """
    Mean relative shortfall (requested - allocated) / requested over
    violation events. Pairs with allocated == requested are not
    violations and are skipped.
    """
    fractions = []
    for requested, allocated in shortfalls:
        if requested <= 0:
            raise ContractViolation(f"requested MIPS must be positive, got {requested}")
        if allocated > requested:
            raise ContractViolation(
                f"allocated {allocated} exceeds requested {requested}"
            )
        if allocated < requested:
            fractions.append((requested - allocated) / requested)
    if not fractions:
        return 0.0
    return math.fsum(fractions) / len(fractions)


def mean_active_hosts(counts: Sequence[float]) -> float:
    """Arithmetic mean of per-interval active host counts (0 for no intervals)."""
    if len(counts) == 0:
        return 0.0
    return math.fsum(counts) / len(counts)


def aggregate(reports: Sequence[MetricsReport]) -> AggregateReport:
    """
    Mean and order statistics (linear-interpolation quartiles) per metric.

    Raises:
        ValueError: If reports is empty
    """
    if len(reports) == 0:
        raise ValueError("cannot aggregate an empty list of reports")
    out = AggregateReport(count=len(reports))
    for name in REPORT_METRICS:
        values = np.sort(np.array([float(getattr(r, name)) for r in reports]))
        q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75])
        out.metrics[name] = MetricSummary(
            mean=math.fsum(values) / len(values),
            min=float(values[0]),
            q1=float(q1),
            median=float(median),
            q3=float(q3),
            max=float(values[-1]),
        )
    return out


class MetricsRecorder:
    """
    Streaming accumulator for one run.

    The engine calls record_interval once per interval with the power of
    every powered-on host and the (requested, allocated) totals of each
    violating host.
    """

    def __init__(self, interval_s: float, slav_denominator: str = "host",
                 record_series: bool = True):
        self.interval_s = interval_s
        self.slav_denominator = slav_denominator
        self.record_series = record_series
        self._power_samples: List[float] = []
        self._active_counts: List[int] = []
        self._shortfalls: List[Tuple[float, float]] = []
        self._violating_intervals = 0
        self._series: List[IntervalSample] = []
        self.migrations = 0

    def record_interval(self, t: int, host_powers: Sequence[float],
                        violations: Sequence[Tuple[int, float, float]]) -> None:
        """
        Args:
            t: Interval index
            host_powers: Power in Watts of each powered-on host
            violations: (host id, requested MIPS, allocated MIPS) per violating host
        """
        total_w = math.fsum(host_powers)
        self._power_samples.append(total_w)
        self._active_counts.append(len(host_powers))
        for _, requested, allocated in violations:
            self._shortfalls.append((requested, allocated))
        if violations:
            self._violating_intervals += 1
        if self.record_series:
            self._series.append(IntervalSample(
                t=t,
                power_w=total_w,
                active_hosts=len(host_powers),
                violating_hosts=tuple(h for h, _, _ in violations),
            ))

    def add_migrations(self, n: int) -> None:
        self.migrations += n

    @property
    def energy_kwh(self) -> float:
        return math.fsum(self._power_samples) * self.interval_s / JOULES_PER_KWH

    def finish(self, cooling: Optional[CoolingModel] = None) -> MetricsReport:
        computing = self.energy_kwh
        active_host_intervals = sum(self._active_counts)
        events = len(self._shortfalls)
        if self.slav_denominator == "wall":
            slav_value = slav(self._violating_intervals, len(self._active_counts))
        else:
            slav_value = slav(events, active_host_intervals)
        return MetricsReport(
            energy_computing=computing,
            energy_total=total_energy(computing, cooling) if cooling else computing,
            migrations=self.migrations,
            slav=slav_value,
            avg_slv=avg_slv(self._shortfalls),
            mean_active_hosts=mean_active_hosts(self._active_counts),
            violation_events=events,
            active_host_intervals=active_host_intervals,
            per_interval=list(self._series) if self.record_series else None,
        )
