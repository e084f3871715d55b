"""
Named random streams derived from a run seed.

Every consumer of randomness gets its own Philox counter-based generator
keyed by (seed, stream). Integer streams are used for per-VM workload
substreams; named streams (policy RNGs, VM type draws) hash the name
into a key range disjoint from the integer one. Adding VMs therefore never
perturbs the traces of existing VMs, and policies never share draws.
"""

import zlib
from typing import Union

import numpy as np

_MASK64 = (1 << 64) - 1
_NAMED_STREAM_BASE = 1 << 32


def stream_key(seed: int, stream: Union[int, str]) -> np.ndarray:
    """Philox key (two uint64 words) for a (seed, stream) pair."""
    if isinstance(stream, str):
        sub = _NAMED_STREAM_BASE + zlib.crc32(stream.encode("utf-8"))
    else:
        if not 0 <= stream < _NAMED_STREAM_BASE:
            raise ValueError(f"integer stream must lie in [0, 2**32), got {stream}")
        sub = int(stream)
    return np.array([int(seed) & _MASK64, sub & _MASK64], dtype=np.uint64)


def rng_stream(seed: int, stream: Union[int, str]) -> np.random.Generator:
    """Independent generator for one named (or numbered) stream of a seed."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, stream)))
