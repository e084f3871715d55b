"""
Experiment sweeps: scenario presets, repetition/seed management, CSV and
plot-data emission.

Repetition r of every cell uses seed base_seed + r, so all policies of a
repetition see the same VM population and the same traces.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd

from .data import (
    PlanetLabFeed,
    SyntheticSpec,
    TraceSet,
    generate_synthetic,
    load_trace_dataset,
    synthetic_preset,
    trace_days,
)
from .engine import Simulation, write_event_log
from .exceptions import ConfigError, PlotDataError, SimulatorError
from .metrics import aggregate
from .model import (
    DEFAULT_HORIZON,
    DEFAULT_INTERVAL_S,
    POLICY_IDS,
    SLAV_DENOMINATORS,
    SimConfig,
    ThresholdConfig,
    build_datacenter,
    vm_count_for_ratio,
)
from .power import parse_power_tables
from .results import MetricsReport

log = logging.getLogger(__name__)

WORKLOADS = ("synthetic", "planetlab-like", "planetlab")

CSV_COLUMNS = (
    "policy", "workload", "seed", "t_low", "t_high", "hosts", "vms",
    "energy_kwh", "energy_total_kwh", "migrations", "slav", "avg_slv",
    "mean_active_hosts", "status", "trace_checksum",
)
METRIC_COLUMNS = (
    "energy_kwh", "energy_total_kwh", "migrations", "slav", "avg_slv", "mean_active_hosts",
)
DEFAULT_T_LOWS = (0.1, 0.2, 0.3, 0.4, 0.5)
BOX_T_LOW = 0.5


@dataclass
class SweepSpec:
    """
    Cross product of policies x thresholds x sizes x repetitions.

    Attributes:
        vms: Explicit VM counts (used when ratios is empty)
        ratios: Hosts:VMs ratios 1:r; VM count per host count = round(hosts * r)
        t_high: Fixed upper threshold; None means t_low + 0.4
        trace_dir: PlanetLab directory (or .parquet cache); required for "planetlab"
        policy_params: Per-policy parameter overrides keyed by policy id
        power_tables: Power model id -> 11 Watts values or a table file;
            hp-g4 / hp-g5 replace the curves of the generated hosts
    """
    name: str = "custom"
    policies: Tuple[str, ...] = POLICY_IDS
    t_lows: Tuple[float, ...] = DEFAULT_T_LOWS
    t_high: Optional[float] = None
    hosts: Tuple[int, ...] = (50,)
    vms: Tuple[int, ...] = (50,)
    ratios: Tuple[float, ...] = ()
    repetitions: int = 10
    base_seed: int = 0
    workload: str = "synthetic"
    trace_dir: Optional[str] = None
    horizon: int = DEFAULT_HORIZON
    interval: float = DEFAULT_INTERVAL_S
    slav_denominator: str = "host"
    policy_params: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    figures: Tuple[str, ...] = ()
    power_tables: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("policies", "t_lows", "hosts", "vms", "ratios", "figures"):
            setattr(self, name, tuple(getattr(self, name)))

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "SweepSpec":
        unknown = sorted(set(doc) - {f.name for f in fields(cls)})
        if unknown:
            raise ConfigError("unknown key(s): " + ", ".join(unknown))
        return cls(**doc)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def violations(self) -> List[str]:
        out = []
        for name in ("policies", "t_lows", "hosts"):
            if not getattr(self, name):
                out.append(f"{name}: must not be empty")
        if not self.vms and not self.ratios:
            out.append("vms: either vms or ratios must be given")
        if not isinstance(self.repetitions, int) or self.repetitions < 1:
            out.append(f"repetitions: must be an integer >= 1, got {self.repetitions!r}")
        for p in self.policies:
            if p not in POLICY_IDS:
                out.append(f"policies: unknown policy {p!r}")
        for t_low in self.t_lows:
            out.extend(self.thresholds(t_low).violations(f"t_lows[{t_low}]"))
        if self.workload not in WORKLOADS:
            out.append(f"workload: must be one of {WORKLOADS}, got {self.workload!r}")
        if self.workload == "planetlab" and not self.trace_dir:
            out.append("trace_dir: required for the planetlab workload")
        if self.slav_denominator not in SLAV_DENOMINATORS:
            out.append(f"slav_denominator: must be one of {SLAV_DENOMINATORS}")
        for p in self.policy_params:
            if p not in POLICY_IDS:
                out.append(f"policy_params: unknown policy {p!r}")
        try:
            parse_power_tables(self.power_tables)
        except ConfigError as e:
            out.append(str(e))
        except FileNotFoundError as e:
            out.append(f"power_tables: {e}")
        return out

    def thresholds(self, t_low: float) -> ThresholdConfig:
        if self.t_high is None:
            return ThresholdConfig.preset(t_low)
        return ThresholdConfig(t_low, self.t_high)

    def sizes(self) -> List[Tuple[int, int]]:
        """(hosts, vms) pairs in sweep order."""
        out = []
        for h in self.hosts:
            if self.ratios:
                out.extend((h, vm_count_for_ratio(h, r)) for r in self.ratios)
            else:
                out.extend((h, v) for v in self.vms)
        return out

    def cells(self) -> List["Cell"]:
        """Every run of the sweep in deterministic order."""
        out = []
        for hosts, vms in self.sizes():
            for t_low in self.t_lows:
                th = self.thresholds(t_low)
                for policy in self.policies:
                    for r in range(self.repetitions):
                        out.append(Cell(policy, th.t_low, th.t_high, hosts, vms, r,
                                        self.base_seed + r))
        return out


@dataclass(frozen=True)
class Cell:
    policy: str
    t_low: float
    t_high: float
    hosts: int
    vms: int
    repetition: int
    seed: int

    @property
    def label(self) -> str:
        return (f"{self.policy}_tlow{self.t_low:g}_h{self.hosts}_v{self.vms}"
                f"_r{self.repetition}")


PRESETS: Dict[str, Dict[str, Any]] = {
    "synthetic-50x50": dict(
        workload="synthetic", hosts=(50,), vms=(50,), t_lows=DEFAULT_T_LOWS,
        figures=("fig2", "fig3"),
    ),
    "synthetic-ratios": dict(
        workload="synthetic", hosts=(50,), ratios=(1.0, 1.25, 1.5, 1.75),
        t_lows=(BOX_T_LOW,), figures=("fig4",),
    ),
    "planetlab-800": dict(
        workload="planetlab-like", hosts=(800,), vms=(1052,), t_lows=DEFAULT_T_LOWS,
        figures=("fig5", "fig6"),
    ),
    "planetlab-sizes": dict(
        workload="planetlab-like", hosts=(800, 900, 1000, 1100), vms=(1052,),
        t_lows=(BOX_T_LOW,), figures=("fig7",),
    ),
}


def preset(name: str, **overrides) -> SweepSpec:
    """
    Sweep spec of a named scenario. A trace_dir override switches the
    planetlab presets from the synthetic stand-in to real traces.

    Raises:
        ConfigError: On an unknown preset or an override that is not a SweepSpec field
    """
    try:
        base = dict(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides.get("trace_dir") and base["workload"] == "planetlab-like":
        base["workload"] = "planetlab"
    base["name"] = name
    base.update(overrides)
    return SweepSpec.from_dict(base)


# --- workloads -------------------------------------------------------------

@lru_cache(maxsize=8)
def _load_trace_source(trace_dir: str, day: Optional[str], vm_count: int, horizon: int) -> TraceSet:
    path = Path(day or trace_dir)
    if path.suffix == ".parquet":
        traces = load_trace_dataset(path)
        if len(traces) < vm_count:
            raise ConfigError(f"{path}: holds {len(traces)} traces, {vm_count} requested")
        return TraceSet({i: traces.per_vm[v][:horizon] for i, v in
                         enumerate(traces.vm_ids[:vm_count])}, traces.interval, horizon)
    return PlanetLabFeed(path, vm_count, length=horizon).load()


def load_workload(spec: SweepSpec, cell: Cell) -> TraceSet:
    """Traces of one cell; PlanetLab repetition r uses day r mod days."""
    if spec.workload == "planetlab":
        days = [] if str(spec.trace_dir).endswith(".parquet") else trace_days(spec.trace_dir)
        day = str(days[cell.repetition % len(days)]) if days else None
        return _load_trace_source(str(spec.trace_dir), day, cell.vms, spec.horizon)
    if spec.workload == "planetlab-like":
        syn = synthetic_preset("planetlab-like", cell.seed, spec.horizon)
    else:
        syn = synthetic_preset("uniform", cell.seed, spec.horizon)
    syn = SyntheticSpec(syn.seed, syn.lo, syn.hi, syn.horizon, spec.interval)
    return generate_synthetic(syn, cell.vms)


# --- execution ---------------------------------------------------------------

def run_cell(spec: SweepSpec, cell: Cell, event_log_dir: Optional[str] = None) -> Dict[str, Any]:
    """One simulation run as a CSV row; failures become a "failed: ..." status."""
    row: Dict[str, Any] = {
        "policy": cell.policy, "workload": spec.workload, "seed": cell.seed,
        "t_low": cell.t_low, "t_high": cell.t_high, "hosts": cell.hosts, "vms": cell.vms,
    }
    row.update({c: float("nan") for c in METRIC_COLUMNS})
    row["trace_checksum"] = ""
    sim = None
    try:
        traces = load_workload(spec, cell)
        row["trace_checksum"] = traces.checksum()
        hosts, vms = build_datacenter(cell.hosts, cell.vms, cell.seed)
        config = SimConfig(
            hosts=hosts, vms=vms,
            thresholds=ThresholdConfig(cell.t_low, cell.t_high),
            policy_id=cell.policy,
            policy_params=dict(spec.policy_params.get(cell.policy, {})),
            seed=cell.seed,
            interval=spec.interval,
            horizon=spec.horizon,
            slav_denominator=spec.slav_denominator,
            record_series=False,
            power_tables=dict(spec.power_tables),
        )
        sim = Simulation(config, traces)
        report = sim.run()
        row.update(report.to_row())
        row["status"] = "ok"
    except (SimulatorError, FileNotFoundError) as e:
        log.warning("cell %s failed: %s", cell.label, e)
        row["status"] = f"failed: {e}"
    except Exception as e:
        log.exception("cell %s aborted", cell.label)
        row["status"] = f"failed: {type(e).__name__}: {e}"
    if event_log_dir and sim is not None:
        write_event_log(sim.events, Path(event_log_dir) / f"{cell.label}.jsonl")
    return {c: row[c] for c in CSV_COLUMNS}


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(spec: SweepSpec, out_dir: Union[str, Path, None] = None, jobs: Optional[int] = None,
              event_log_dir: Optional[str] = None) -> pd.DataFrame:
    """
    Execute every cell and return the result table (one row per run, in
    cell order regardless of completion order). With out_dir, writes
    results.csv and aggregate.csv there.

    Raises:
        ConfigError: If the sweep settings are invalid
    """
    problems = spec.violations()
    if problems:
        raise ConfigError("invalid sweep: " + "; ".join(problems))
    cells = spec.cells()
    jobs = jobs or os.cpu_count() or 1
    log.info("sweep %s: %d runs on %d worker(s)", spec.name, len(cells), jobs)

    args = [(spec, cell, event_log_dir) for cell in cells]
    if jobs == 1 or len(cells) == 1:
        rows = [_run_cell_args(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell_args, args, chunksize=max(1, len(args) // (4 * jobs))))

    table = pd.DataFrame(rows, columns=list(CSV_COLUMNS))
    failed = int((table["status"] != "ok").sum())
    if failed:
        log.warning("sweep %s: %d of %d runs failed", spec.name, failed, len(table))
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_csv(table, out_dir / "results.csv")
        write_csv(aggregate_table(table), out_dir / "aggregate.csv")
    return table


def write_csv(table: pd.DataFrame, path: Union[str, Path]) -> None:
    """CSV with a single "# generated <timestamp>" comment line on top."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    with open(path, "w", newline="") as f:
        f.write(f"# generated {stamp}\n")
        table.to_csv(f, index=False)


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", keep_default_na=False, na_values=["nan", "NaN"])


CELL_KEYS = ["policy", "workload", "t_low", "t_high", "hosts", "vms"]


def aggregate_table(table: pd.DataFrame) -> pd.DataFrame:
    """Mean and order statistics per cell over its successful repetitions."""
    out = []
    ok = table[table["status"] == "ok"]
    for key, group in ok.groupby(CELL_KEYS, sort=False):
        reports = [MetricsReport.from_row(r) for r in group.to_dict("records")]
        agg = aggregate(reports)
        row = dict(zip(CELL_KEYS, key))
        row["repetitions"] = agg.count
        for column, metric in zip(METRIC_COLUMNS, _REPORT_FIELDS):
            s = agg[metric]
            for stat in ("mean", "min", "q1", "median", "q3", "max"):
                row[f"{column}_{stat}"] = getattr(s, stat)
        out.append(row)
    return pd.DataFrame(out)


_REPORT_FIELDS = (
    "energy_computing", "energy_total", "migrations", "slav", "avg_slv", "mean_active_hosts",
)


# --- plot data ---------------------------------------------------------------

@dataclass(frozen=True)
class FigureSpec:
    """x axis of a figure; box figures plot per-policy spread at t_low = 0.5."""
    x: str
    box: bool = False


FIGURES: Dict[str, FigureSpec] = {
    "fig2": FigureSpec("t_low"),
    "fig3": FigureSpec("policy", box=True),
    "fig4": FigureSpec("ratio"),
    "fig5": FigureSpec("t_low"),
    "fig6": FigureSpec("policy", box=True),
    "fig7": FigureSpec("hosts"),
}

PLOT_METRICS = {
    "energy": "energy_kwh",
    "migrations": "migrations",
    "active_hosts": "mean_active_hosts",
    "slav": "slav",
}


def _figure_rows(table: pd.DataFrame, figure: FigureSpec) -> pd.DataFrame:
    ok = table[table["status"] == "ok"].copy()
    ok["ratio"] = (ok["vms"] / ok["hosts"]).round(2)
    if figure.x == "t_low":
        first = ok.sort_values(["hosts", "vms"]).iloc[0] if len(ok) else None
        if first is not None:
            ok = ok[(ok["hosts"] == first["hosts"]) & (ok["vms"] == first["vms"])]
    else:
        ok = ok[(ok["t_low"] - BOX_T_LOW).abs() < 1e-9]
        if figure.box and len(ok):
            first = ok.sort_values(["hosts", "vms"]).iloc[0]
            ok = ok[(ok["hosts"] == first["hosts"]) & (ok["vms"] == first["vms"])]
    return ok


def emit_plot_data(table: pd.DataFrame, figure: str, out_dir: Union[str, Path]) -> List[Path]:
    """
    Write one whitespace-separated file per metric, named
    <figure>_<metric>.dat.

    Line figures: x column plus one column of means per policy.
    Box figures: one row per policy with min q1 median q3 max mean.

    Raises:
        PlotDataError: If the table is empty or a (x, policy) cell has no
            successful run
    """
    try:
        spec = FIGURES[figure]
    except KeyError:
        raise PlotDataError(f"unknown figure {figure!r}; known: {sorted(FIGURES)}") from None
    if table is None or len(table) == 0:
        raise PlotDataError("result table is empty")

    policies = [p for p in POLICY_IDS if p in set(table["policy"])]
    rows = _figure_rows(table, spec)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if spec.box:
        missing = [f"t_low={BOX_T_LOW} policy={p}" for p in policies if p not in set(rows["policy"])]
    else:
        xs = sorted(set(table.assign(ratio=(table["vms"] / table["hosts"]).round(2))[spec.x]))
        present = set(zip(rows[spec.x], rows["policy"]))
        missing = [f"{spec.x}={x} policy={p}" for x in xs for p in policies if (x, p) not in present]
    if missing:
        raise PlotDataError(f"{figure}: {len(missing)} missing cell(s)", missing)

    paths = []
    for metric, column in PLOT_METRICS.items():
        if spec.box:
            data = []
            for p in policies:
                reports = [MetricsReport.from_row(r)
                           for r in rows[rows["policy"] == p].to_dict("records")]
                s = aggregate(reports)[_REPORT_FIELDS[METRIC_COLUMNS.index(column)]]
                data.append({"policy": p, "min": s.min, "q1": s.q1, "median": s.median,
                             "q3": s.q3, "max": s.max, "mean": s.mean})
            frame = pd.DataFrame(data)
        else:
            frame = (
                rows.groupby([spec.x, "policy"])[column].mean()
                .unstack("policy")[policies]
                .reset_index()
            )
        path = out_dir / f"{figure}_{metric}.dat"
        frame.to_csv(path, sep=" ", index=False, float_format="%.10g")
        paths.append(path)
    log.info("wrote %d plot-data files for %s", len(paths), figure)
    return paths
