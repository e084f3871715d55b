"""
Parquet cache for parsed trace sets.

Parsing a PlanetLab day (1000+ small text files) dominates start-up of
large sweeps; converting it once to a single Parquet file makes reloads
near-instant.
"""

from pathlib import Path
from typing import Union

import numpy as np

from .feeds import TraceSet

# Try to import polars (preferred), fall back to pandas
try:
    import polars as pl
    HAS_POLARS = True
except ImportError:
    import pandas as pd
    HAS_POLARS = False

COLUMNS = ("vm_id", "t", "utilization")


def convert_traces_to_parquet(
    traces: TraceSet,
    output_parquet: Union[str, Path],
    compression: str = 'zstd'
) -> None:
    """
    Write a TraceSet to Parquet in long format.

    Output Parquet schema:
        - vm_id: Int64
        - t: Int32 (interval index)
        - utilization: Float64
    The sampling interval is stored in the file's key-value metadata.

    Args:
        traces: Trace set to persist
        output_parquet: Path to output Parquet file
        compression: Compression codec ('zstd', 'snappy', 'gzip', or None)
    """
    output_path = Path(output_parquet)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    matrix = traces.as_matrix()
    vm_ids = np.repeat(np.asarray(traces.vm_ids, dtype=np.int64), traces.length)
    t = np.tile(np.arange(traces.length, dtype=np.int32), len(traces))
    utilization = matrix.reshape(-1)

    if HAS_POLARS:
        df = pl.DataFrame({'vm_id': vm_ids, 't': t, 'utilization': utilization})
        table = df.to_arrow()
    else:
        import pyarrow as pa
        df = pd.DataFrame({'vm_id': vm_ids, 't': t, 'utilization': utilization})
        table = pa.Table.from_pandas(df, preserve_index=False)

    _write_with_metadata(table, output_path, compression, traces.interval)


def _write_with_metadata(table, output_path: Path, compression, interval: float) -> None:
    import pyarrow.parquet as pq

    metadata = dict(table.schema.metadata or {})
    metadata[b'interval'] = str(float(interval)).encode()
    table = table.replace_schema_metadata(metadata)
    pq.write_table(table, output_path, compression=compression or 'none')


def load_trace_dataset(parquet_path: Union[str, Path]) -> TraceSet:
    """
    Load a Parquet trace cache back into a TraceSet.

    Raises:
        FileNotFoundError: If Parquet file doesn't exist
    """
    import pyarrow.parquet as pq

    parquet_path = Path(parquet_path)
    if not parquet_path.exists():
        raise FileNotFoundError(f"Parquet file not found: {parquet_path}")

    metadata = pq.read_schema(parquet_path).metadata or {}
    interval = float(metadata.get(b'interval', b'300'))

    if HAS_POLARS:
        df = pl.read_parquet(parquet_path).sort(['vm_id', 't'])
        vm_ids = df['vm_id'].to_numpy().astype(np.int64)
        values = df['utilization'].to_numpy().astype(np.float64)
    else:
        df = pd.read_parquet(parquet_path, engine='pyarrow').sort_values(['vm_id', 't'])
        vm_ids = df['vm_id'].to_numpy().astype(np.int64)
        values = df['utilization'].to_numpy().astype(np.float64)

    unique_ids, counts = np.unique(vm_ids, return_counts=True)
    length = int(counts[0]) if len(counts) else 0
    per_vm = dict(zip(unique_ids.tolist(), np.split(values, np.cumsum(counts)[:-1])))
    return TraceSet(per_vm, interval, length)
