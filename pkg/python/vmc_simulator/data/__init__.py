"""
Workload module.

Provides VM utilization traces from PlanetLab-format directories or a
seeded synthetic generator.
"""

from .feeds import BaseFeed, TraceSet, demand_at
from .planetlab import PlanetLabFeed, load_planetlab, trace_days, write_planetlab
from .synthetic import (
    SYNTHETIC_PRESETS,
    SyntheticFeed,
    SyntheticSpec,
    generate_synthetic,
    synthetic_preset,
)
from .converter import convert_traces_to_parquet, load_trace_dataset
from ..streams import rng_stream

__all__ = [
    "BaseFeed",
    "TraceSet",
    "demand_at",
    "PlanetLabFeed",
    "load_planetlab",
    "trace_days",
    "write_planetlab",
    "SYNTHETIC_PRESETS",
    "SyntheticFeed",
    "SyntheticSpec",
    "generate_synthetic",
    "synthetic_preset",
    "convert_traces_to_parquet",
    "load_trace_dataset",
    "rng_stream",
]
