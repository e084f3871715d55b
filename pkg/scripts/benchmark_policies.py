#!/usr/bin/env python3
"""
Benchmark the six consolidation policies against their expected orderings.

Runs the synthetic-50x50 sweep (and optionally planetlab-800) and prints
the comparative checks: threshold trends, ACS energy advantage, EcoCloud
migration minimum, active-host ordering and the PlanetLab-style ranking.

    python scripts/benchmark_policies.py --reps 10
    python scripts/benchmark_policies.py --planetlab --trace-dir traces
"""

import argparse
import sys
import time
from pathlib import Path

# Add parent directory to path to import vmc_simulator
sys.path.insert(0, str(Path(__file__).parent.parent / "python"))

from vmc_simulator.model import POLICY_IDS
from vmc_simulator.sweep import preset, run_sweep


def means(table, column, t_low=None):
    """Mean of a result column per policy, optionally at one t_low."""
    ok = table[table["status"] == "ok"]
    if t_low is not None:
        ok = ok[(ok["t_low"] - t_low).abs() < 1e-9]
    return ok.groupby("policy")[column].mean()


def report(name: str, passed: bool, detail: str) -> bool:
    mark = "✓" if passed else "✗"
    print(f"  {mark} {name}: {detail}")
    return passed


def synthetic_checks(table) -> list:
    results = []
    e_low, e_high = means(table, "energy_kwh", 0.1), means(table, "energy_kwh", 0.5)
    s_low, s_high = means(table, "slav", 0.1), means(table, "slav", 0.5)
    for p in POLICY_IDS:
        results.append(report(f"energy trend {p}", e_high[p] <= e_low[p],
                              f"{e_high[p]:.3f} kWh at 0.5 vs {e_low[p]:.3f} at 0.1"))
    for p in POLICY_IDS:
        results.append(report(f"SLAV trend {p}", s_high[p] >= s_low[p],
                              f"{s_high[p]:.5f} at 0.5 vs {s_low[p]:.5f} at 0.1"))

    results.append(report("ACS energy advantage", e_high["acs"] <= 0.90 * e_high["mbfd"],
                          f"acs {e_high['acs']:.3f} vs 0.9 x mbfd {0.9 * e_high['mbfd']:.3f}"))

    for t_low in (0.3, 0.4, 0.5):
        m = means(table, "migrations", t_low)
        others = m.drop("ecocloud")
        results.append(report(f"EcoCloud fewest migrations at {t_low}",
                              m["ecocloud"] < others.min(),
                              f"{m['ecocloud']:.1f} vs next {others.min():.1f} ({others.idxmin()})"))

    a = means(table, "mean_active_hosts", 0.5)
    results.append(report("active hosts acs <= mbfd <= iqr", a["acs"] <= a["mbfd"] <= a["iqr"],
                          f"{a['acs']:.2f} / {a['mbfd']:.2f} / {a['iqr']:.2f}"))
    return results


def planetlab_checks(table) -> list:
    e = means(table, "energy_kwh")
    s = means(table, "slav")
    m = means(table, "migrations")
    return [
        report("ACS lowest energy", e.idxmin() == "acs", f"lowest is {e.idxmin()} ({e.min():.2f} kWh)"),
        report("EcoCloud lowest SLAV", s.idxmin() == "ecocloud", f"lowest is {s.idxmin()} ({s.min():.2e})"),
        report("EcoCloud fewest migrations", m.idxmin() == "ecocloud",
               f"fewest is {m.idxmin()} ({m.min():.1f})"),
        report("LOAD migrates less than MBFD", m["load"] < m["mbfd"],
               f"{m['load']:.1f} vs {m['mbfd']:.1f}"),
    ]


def timed_sweep(spec, jobs, out_dir):
    print(f"\nRunning {spec.name}: {len(spec.cells())} runs...")
    start = time.perf_counter()
    table = run_sweep(spec, out_dir, jobs=jobs)
    print(f"  finished in {time.perf_counter() - start:.1f} s")
    return table


def main():
    parser = argparse.ArgumentParser(description="Comparative policy benchmark")
    parser.add_argument('--reps', type=int, default=10, help='Repetitions per cell')
    parser.add_argument('--jobs', type=int, help='Worker processes (default: CPU count)')
    parser.add_argument('--planetlab', action='store_true', help='Also run planetlab-800')
    parser.add_argument('--trace-dir', help='Real PlanetLab traces for planetlab-800')
    parser.add_argument('--out-dir', type=Path, default=Path('out/benchmark'))
    args = parser.parse_args()

    print("=" * 70)
    print("VM CONSOLIDATION POLICY BENCHMARK")
    print("=" * 70)

    spec = preset("synthetic-50x50", repetitions=args.reps)
    table = timed_sweep(spec, args.jobs, args.out_dir / spec.name)
    results = synthetic_checks(table)

    if args.planetlab:
        spec = preset("planetlab-800", repetitions=args.reps, t_lows=(0.5,),
                      trace_dir=args.trace_dir)
        table = timed_sweep(spec, args.jobs, args.out_dir / spec.name)
        results += planetlab_checks(table)

    print(f"\n{sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
