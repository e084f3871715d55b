#!/usr/bin/env python3
"""
Generate a multi-day trace tree in PlanetLab format.

Each day directory holds one file per VM with 288 integer CPU percentages,
drawn from the low-utilization "planetlab-like" generator. Useful when the
real PlanetLab archive is not at hand:

    python scripts/generate_planetlab_traces.py --out traces --days 10 --vms 1052
    python -m vmc_simulator --preset planetlab-800 --trace-dir traces
"""

import argparse
import sys
import time
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent / "python"))

from vmc_simulator.data import (
    convert_traces_to_parquet,
    generate_synthetic,
    load_planetlab,
    load_trace_dataset,
    synthetic_preset,
    write_planetlab,
)


def generate_day(out_dir: Path, day: int, vm_count: int, seed: int) -> Path:
    """Write one day of traces and return its directory."""
    traces = generate_synthetic(synthetic_preset("planetlab-like", seed), vm_count)
    day_dir = out_dir / f"day{day:02d}"
    write_planetlab(traces, day_dir)
    return day_dir


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument('--out', type=Path, default=Path('traces'), help='Output directory')
    parser.add_argument('--days', type=int, default=10, help='Number of day directories')
    parser.add_argument('--vms', type=int, default=1052, help='Traces per day')
    parser.add_argument('--seed', type=int, default=0, help='Seed of the first day')
    parser.add_argument('--parquet', action='store_true',
                        help='Also cache the first day as a Parquet file')
    args = parser.parse_args()

    print(f"Generating {args.days} day(s) x {args.vms:,} VM traces into {args.out}...")
    start = time.perf_counter()
    for day in range(args.days):
        day_dir = generate_day(args.out, day, args.vms, args.seed + day)
        print(f"  {day_dir.name}: {args.vms} files")
    print(f"Done in {time.perf_counter() - start:.2f} s")

    if args.parquet:
        traces = load_planetlab(args.out / "day00", args.vms)
        cache = args.out / "day00.parquet"
        convert_traces_to_parquet(traces, cache)
        loaded = load_trace_dataset(cache)
        size_kb = cache.stat().st_size / 1024
        print(f"Parquet cache: {cache} ({size_kb:.1f} KB, {len(loaded)} traces)")


if __name__ == "__main__":
    main()
