"""
PlanetLab / CoMon trace directory feed.

Layout: one plain-text file per VM, arbitrary filename, one integer
0-100 per line (LF or CRLF), one line per five-minute sample. A day of
data is 288 lines.
"""

import logging
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import numpy as np

from ..exceptions import TraceFormatError
from .feeds import BaseFeed, TraceSet

log = logging.getLogger(__name__)

PLANETLAB_INTERVAL_S = 300
PLANETLAB_DAY_LENGTH = 288


class PlanetLabFeed(BaseFeed):
    """
    Reads the first vm_count files (lexicographic order) of a trace directory.

    Files shorter than `length` lines are rejected; longer files are
    truncated to `length` samples.
    """

    def __init__(
        self,
        directory: Union[str, Path],
        vm_count: int = None,
        length: int = PLANETLAB_DAY_LENGTH,
        interval: float = PLANETLAB_INTERVAL_S,
    ):
        """
        Args:
            directory: Directory holding one trace file per VM
            vm_count: Number of files to read (None = all files)
            length: Samples required per file
            interval: Sampling interval in seconds

        Raises:
            FileNotFoundError: If the directory doesn't exist
            TraceFormatError: If it holds fewer than vm_count files
        """
        self.directory = Path(directory)
        self.length = length
        self.interval = interval

        if not self.directory.is_dir():
            raise FileNotFoundError(f"Trace directory not found: {self.directory}")

        files = trace_files(self.directory)
        if vm_count is None:
            vm_count = len(files)
        if len(files) < vm_count:
            raise TraceFormatError(
                f"directory holds {len(files)} trace files but {vm_count} VMs were "
                f"requested (short by {vm_count - len(files)})",
                path=self.directory,
            )
        self.files: List[Path] = files[:vm_count]

    def iter_traces(self) -> Iterator[Tuple[str, np.ndarray]]:
        for path in self.files:
            yield path.name, parse_trace_file(path, self.length)

    def load(self) -> TraceSet:
        traces = {i: samples for i, (_, samples) in enumerate(self.iter_traces())}
        log.info("loaded %d PlanetLab traces from %s", len(traces), self.directory)
        return TraceSet(traces, self.interval, self.length)


def trace_files(directory: Path) -> List[Path]:
    """Regular files of a trace directory in lexicographic name order."""
    return sorted((p for p in directory.iterdir() if p.is_file()), key=lambda p: p.name)


def trace_days(directory: Union[str, Path]) -> List[Path]:
    """
    Day sub-directories of a multi-day trace tree, sorted by name.

    A directory with no sub-directories is a single day (itself).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Trace directory not found: {directory}")
    days = sorted((p for p in directory.iterdir() if p.is_dir()), key=lambda p: p.name)
    return days or [directory]


def parse_trace_file(path: Path, length: int = PLANETLAB_DAY_LENGTH) -> np.ndarray:
    """
    Parse one trace file into `length` utilization fractions.

    Raises:
        TraceFormatError: On non-integer lines, values outside 0-100, or
            fewer than `length` lines (file and line number included)
    """
    values: List[int] = []
    with open(path, "r", newline=None) as f:
        for lineno, raw in enumerate(f, start=1):
            if len(values) >= length:
                break
            text = raw.strip()
            try:
                value = int(text)
            except ValueError:
                raise TraceFormatError(f"not an integer: {text!r}", path=path, line=lineno) from None
            if not 0 <= value <= 100:
                raise TraceFormatError(f"value {value} outside 0-100", path=path, line=lineno)
            values.append(value)
    if len(values) < length:
        raise TraceFormatError(
            f"file has {len(values)} samples, expected {length}", path=path
        )
    return np.asarray(values, dtype=np.float64) / 100.0


def load_planetlab(directory: Union[str, Path], vm_count: int,
                   length: int = PLANETLAB_DAY_LENGTH) -> TraceSet:
    """Load the first vm_count traces of a PlanetLab-format directory."""
    return PlanetLabFeed(directory, vm_count, length=length).load()


def write_planetlab(traces: TraceSet, directory: Union[str, Path]) -> List[Path]:
    """
    Write a TraceSet in PlanetLab format, one file per VM named by zero-padded id.

    Values are written as round(u * 100); traces loaded by load_planetlab
    round-trip exactly.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(max(traces.vm_ids, default=0))))
    written = []
    for vm_id, samples in traces.per_vm.items():
        path = directory / f"vm_{vm_id:0{width}d}"
        ints = np.rint(samples * 100.0).astype(np.int64)
        path.write_text("".join(f"{v}\n" for v in ints))
        written.append(path)
    return written
