"""
Independent metrics oracle.

Recomputes a run's metrics from its exported event log and the traces
alone, without touching the engine's allocation or recorder code.
"""

import math
from collections import defaultdict
from typing import Dict, Iterable, List, Set

from .data.feeds import TraceSet
from .engine import Event
from .model import SimConfig
from .power import JOULES_PER_KWH, total_energy
from .results import MetricsReport

_KIND_ORDER = {"placement": 0, "power-on": 1, "migration": 2, "power-off": 3, "sla-violation": 4}


def replay_event_log(events: Iterable[Event], config: SimConfig, traces: TraceSet) -> MetricsReport:
    """
    Rebuild residency and power state interval by interval and sum
    power(u_clamped) * interval per powered-on host.
    """
    by_time: Dict[int, List[Event]] = defaultdict(list)
    for e in events:
        by_time[e.time].append(e)

    hosts = {h.id: h for h in config.hosts}
    vms = {v.id: v for v in config.vms}
    models = {h.id: config.power_model(h.power_model_id) for h in config.hosts}
    residents: Dict[int, Set[int]] = {h: set() for h in hosts}
    powered: Set[int] = set()
    migrations = 0

    energy_j = []
    active_counts = []
    shortfalls = []
    violating_intervals = 0
    for t in range(config.horizon):
        for e in sorted(by_time.get(t, ()), key=lambda e: _KIND_ORDER[e.kind]):
            if e.kind == "placement":
                residents[e.host].add(e.vm)
            elif e.kind == "migration":
                residents[e.host].discard(e.vm)
                residents[e.dest].add(e.vm)
                migrations += 1
            elif e.kind == "power-on":
                powered.add(e.host)
            elif e.kind == "power-off":
                powered.discard(e.host)

        violated = False
        count = 0
        for h in sorted(powered):
            spec = hosts[h]
            capacity = spec.mips_per_core * spec.cores
            demand = sum(vms[v].mips * float(traces.per_vm[v][t]) for v in sorted(residents[h]))
            u = min(1.0, demand / capacity)
            energy_j.append(models[h].power(u) * config.interval)
            count += 1
            if demand > capacity:
                shortfalls.append((demand - capacity) / demand)
                violated = True
        active_counts.append(count)
        violating_intervals += violated

    computing = math.fsum(energy_j) / JOULES_PER_KWH
    host_intervals = sum(active_counts)
    if config.slav_denominator == "wall":
        slav = violating_intervals / config.horizon
    else:
        slav = len(shortfalls) / host_intervals if host_intervals else 0.0
    return MetricsReport(
        energy_computing=computing,
        energy_total=total_energy(computing, config.cooling),
        migrations=migrations,
        slav=slav,
        avg_slv=math.fsum(shortfalls) / len(shortfalls) if shortfalls else 0.0,
        mean_active_hosts=math.fsum(active_counts) / len(active_counts) if active_counts else 0.0,
        violation_events=len(shortfalls),
        active_host_intervals=host_intervals,
    )
