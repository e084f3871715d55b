"""
Seeded synthetic workload generator.

VM i's samples come from the Philox stream keyed by (seed, i), so traces
depend only on (seed, lo, hi, horizon, i): growing the VM count for a
ratio sweep leaves the first VMs' traces untouched.
"""

from dataclasses import dataclass
from typing import Dict, Iterator, Tuple

import numpy as np

from ..exceptions import ConfigError
from ..streams import rng_stream
from .feeds import BaseFeed, TraceSet


@dataclass(frozen=True)
class SyntheticSpec:
    """Uniform(lo, hi) utilization per VM per interval."""
    seed: int
    lo: float = 0.0
    hi: float = 1.0
    horizon: int = 288
    interval: float = 300.0

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.hi <= 1.0:
            raise ConfigError(
                f"synthetic distribution requires 0 <= lo <= hi <= 1, "
                f"got lo={self.lo}, hi={self.hi}"
            )
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")


# name -> (lo, hi)
SYNTHETIC_PRESETS: Dict[str, Tuple[float, float]] = {
    "uniform": (0.0, 1.0),
    # stand-in for PlanetLab days when no trace directory is supplied (mean 0.2)
    "planetlab-like": (0.0, 0.4),
}


class SyntheticFeed(BaseFeed):
    """Feed wrapper around generate_synthetic."""

    def __init__(self, spec: SyntheticSpec, vm_count: int):
        if vm_count < 1:
            raise ConfigError(f"vm_count must be >= 1, got {vm_count}")
        self.spec = spec
        self.vm_count = vm_count
        self.interval = spec.interval

    def iter_traces(self) -> Iterator[Tuple[str, np.ndarray]]:
        span = self.spec.hi - self.spec.lo
        for i in range(self.vm_count):
            draws = rng_stream(self.spec.seed, i).random(self.spec.horizon)
            yield f"vm-{i}", self.spec.lo + span * draws


def generate_synthetic(spec: SyntheticSpec, vm_count: int) -> TraceSet:
    """Deterministic uniform(lo, hi) traces for VMs 0..vm_count-1."""
    return SyntheticFeed(spec, vm_count).load()


def synthetic_preset(name: str, seed: int, horizon: int = 288) -> SyntheticSpec:
    try:
        lo, hi = SYNTHETIC_PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown synthetic preset {name!r}; known: {sorted(SYNTHETIC_PRESETS)}"
        ) from None
    return SyntheticSpec(seed=seed, lo=lo, hi=hi, horizon=horizon)
