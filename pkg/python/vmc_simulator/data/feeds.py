"""
Base workload abstractions.
"""

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Iterator, Mapping, Tuple

import numpy as np

from ..exceptions import ContractViolation, TraceFormatError

if TYPE_CHECKING:
    from ..model import VmSpec


@dataclass(frozen=True)
class TraceSet:
    """
    Per-VM CPU utilization fractions, one sample per interval.

    Attributes:
        per_vm: VM id -> read-only float64 array of fractions in [0, 1]
        interval: Sampling interval in seconds
        length: Number of samples per VM (the horizon)
    """
    per_vm: Mapping[int, np.ndarray]
    interval: float
    length: int

    def __post_init__(self):
        frozen: Dict[int, np.ndarray] = {}
        for vm_id, values in self.per_vm.items():
            arr = np.array(values, dtype=np.float64)
            if arr.ndim != 1 or len(arr) != self.length:
                raise TraceFormatError(
                    f"trace of VM {vm_id} has length {arr.shape}, expected {self.length}"
                )
            if arr.size and (arr.min() < 0.0 or arr.max() > 1.0 or np.isnan(arr).any()):
                raise TraceFormatError(f"trace of VM {vm_id} has values outside [0, 1]")
            arr.setflags(write=False)
            frozen[int(vm_id)] = arr
        object.__setattr__(self, "per_vm", dict(sorted(frozen.items())))

    @property
    def vm_ids(self) -> Tuple[int, ...]:
        return tuple(self.per_vm)

    def __len__(self) -> int:
        return len(self.per_vm)

    def covers(self, vm_ids, horizon: int) -> bool:
        return self.length >= horizon and all(v in self.per_vm for v in vm_ids)

    def as_matrix(self) -> np.ndarray:
        """(vm_count, length) array in ascending VM id order."""
        if not self.per_vm:
            return np.zeros((0, self.length))
        return np.vstack(list(self.per_vm.values()))

    def checksum(self) -> str:
        """sha256 over VM ids and samples; identical traces give identical digests."""
        digest = hashlib.sha256()
        digest.update(np.asarray(self.vm_ids, dtype=np.int64).tobytes())
        digest.update(np.ascontiguousarray(self.as_matrix()).tobytes())
        return digest.hexdigest()[:16]

    def relabel(self, vm_ids) -> "TraceSet":
        """Same traces keyed by new ids, assigned in ascending order of the old ids."""
        vm_ids = list(vm_ids)
        if len(vm_ids) != len(self.per_vm):
            raise ValueError(f"need {len(self.per_vm)} ids, got {len(vm_ids)}")
        return TraceSet(dict(zip(vm_ids, self.per_vm.values())), self.interval, self.length)


def demand_at(traces: TraceSet, vm: "VmSpec", t: int) -> float:
    """Requested MIPS of a VM in interval t: vm.mips * trace value."""
    if not 0 <= t < traces.length:
        raise ContractViolation(f"interval index {t} outside [0, {traces.length})")
    try:
        series = traces.per_vm[vm.id]
    except KeyError:
        raise ContractViolation(f"no trace for VM {vm.id}") from None
    return vm.mips * float(series[t])


class BaseFeed(ABC):
    """
    Abstract source of VM utilization traces.

    Feeds yield (name, samples) pairs in a deterministic order; load()
    turns them into a TraceSet keyed 0..n-1.
    """

    interval: float = 300.0

    @abstractmethod
    def iter_traces(self) -> Iterator[Tuple[str, np.ndarray]]:
        """
        Yield (trace name, utilization fractions) in deterministic order.
        """
        pass

    def load(self) -> TraceSet:
        traces = [samples for _, samples in self.iter_traces()]
        length = len(traces[0]) if traces else 0
        return TraceSet(dict(enumerate(traces)), self.interval, length)
