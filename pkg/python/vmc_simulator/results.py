"""Run and aggregate result containers"""
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple
import json
import pandas as pd

REPORT_METRICS = (
    "energy_computing",
    "energy_total",
    "migrations",
    "slav",
    "avg_slv",
    "mean_active_hosts",
)


@dataclass(frozen=True)
class IntervalSample:
    """Per-interval snapshot streamed by the engine"""
    t: int
    power_w: float
    active_hosts: int
    violating_hosts: Tuple[int, ...] = ()


@dataclass
class MetricsReport:
    """Totals of one simulation run"""
    energy_computing: float       # kWh
    energy_total: float           # kWh, computing + cooling
    migrations: int
    slav: float
    avg_slv: float
    mean_active_hosts: float
    violation_events: int = 0
    active_host_intervals: int = 0
    per_interval: Optional[List[IntervalSample]] = None

    def to_dict(self, include_series: bool = False) -> dict:
        d = {name: getattr(self, name) for name in REPORT_METRICS}
        d["violation_events"] = self.violation_events
        d["active_host_intervals"] = self.active_host_intervals
        if include_series and self.per_interval is not None:
            d["per_interval"] = [asdict(s) for s in self.per_interval]
        return d

    def to_json(self, path: str, include_series: bool = True):
        """Export report (optionally with the per-interval series) to JSON"""
        with open(path, 'w') as f:
            json.dump(self.to_dict(include_series), f, indent=2)

    def to_row(self) -> dict:
        """CSV row fragment using the sweep column names"""
        return {
            'energy_kwh': self.energy_computing,
            'energy_total_kwh': self.energy_total,
            'migrations': self.migrations,
            'slav': self.slav,
            'avg_slv': self.avg_slv,
            'mean_active_hosts': self.mean_active_hosts,
        }

    @classmethod
    def from_row(cls, row: dict) -> "MetricsReport":
        """Inverse of to_row (series and SLAV counters are not carried by rows)."""
        return cls(
            energy_computing=float(row['energy_kwh']),
            energy_total=float(row['energy_total_kwh']),
            migrations=int(row['migrations']),
            slav=float(row['slav']),
            avg_slv=float(row['avg_slv']),
            mean_active_hosts=float(row['mean_active_hosts']),
        )

    def series_frame(self) -> pd.DataFrame:
        """Per-interval series as a DataFrame"""
        return pd.DataFrame([
            {
                't': s.t,
                'power_w': s.power_w,
                'active_hosts': s.active_hosts,
                'violations': len(s.violating_hosts),
            }
            for s in (self.per_interval or [])
        ])

    def summary(self) -> str:
        """Get text summary"""
        return f"""
Simulation Results:
-------------------
Energy (computing): {self.energy_computing:.3f} kWh
Energy (with cooling): {self.energy_total:.3f} kWh
VM migrations: {self.migrations}
SLAV: {self.slav:.6f}
Average SLA violation: {self.avg_slv:.4f}
Mean active hosts: {self.mean_active_hosts:.2f}
""".strip()


@dataclass(frozen=True)
class MetricSummary:
    """Order statistics of one metric across repetitions"""
    mean: float
    min: float
    q1: float
    median: float
    q3: float
    max: float


@dataclass
class AggregateReport:
    """Per-metric statistics across repetitions"""
    count: int
    metrics: Dict[str, MetricSummary] = field(default_factory=dict)

    def __getitem__(self, metric: str) -> MetricSummary:
        return self.metrics[metric]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{'metric': name, **asdict(summary)} for name, summary in self.metrics.items()]
        )
