"""
Command-line entry point: run a preset or a custom sweep.

    python -m vmc_simulator --preset synthetic-50x50 --out-dir out --emit-plots

Settings merge as defaults < --config JSON < flags.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .exceptions import ConfigError, PlotDataError
from .model import POLICY_IDS
from .sweep import PRESETS, WORKLOADS, SweepSpec, emit_plot_data, preset, run_sweep

log = logging.getLogger(__name__)


def _csv_list(kind):
    def parse(text: str):
        try:
            return tuple(kind(x) for x in text.split(",") if x.strip())
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmc-simulator",
        description="Energy-efficient VM consolidation simulator",
    )
    parser.add_argument('--preset', choices=sorted(PRESETS),
                        help='Scenario preset')
    parser.add_argument('--config', type=Path,
                        help='JSON file with sweep settings (keys as SweepSpec fields)')
    parser.add_argument('--policy', type=_csv_list(str),
                        help=f'Comma-separated policy ids ({",".join(POLICY_IDS)})')
    parser.add_argument('--workload', choices=WORKLOADS)
    parser.add_argument('--trace-dir',
                        help='PlanetLab trace directory (or .parquet cache)')
    parser.add_argument('--hosts', type=_csv_list(int), help='Comma-separated host counts')
    parser.add_argument('--vms', type=_csv_list(int), help='Comma-separated VM counts')
    parser.add_argument('--tlow', type=_csv_list(float), help='Comma-separated lower thresholds')
    parser.add_argument('--thigh', type=float, help='Fixed upper threshold (default t_low + 0.4)')
    parser.add_argument('--seed', type=int, help='Base seed; repetition r uses seed + r')
    parser.add_argument('--reps', type=int, help='Repetitions per cell')
    parser.add_argument('--out-dir', type=Path, default=Path('out'),
                        help='Output directory (default: out)')
    parser.add_argument('--emit-plots', action='store_true',
                        help="Write plot-data files for the preset's figures")
    parser.add_argument('--render', action='store_true',
                        help='Also render PNGs from the plot-data files')
    parser.add_argument('--slav-denominator', choices=('host', 'wall'))
    parser.add_argument('--load-underload', choices=('on', 'off'),
                        help='LOAD underload handling (default on)')
    parser.add_argument('--power-table', action='append', metavar='ID=FILE',
                        help='Power model from an 11-value JSON table; '
                             'hp-g4 / hp-g5 replace the built-in curves (repeatable)')
    parser.add_argument('--jobs', type=int, help='Worker processes (default: CPU count)')
    parser.add_argument('--event-log', type=Path,
                        help='Directory for one JSON-lines event log per run')
    parser.add_argument('--log-level', default='WARNING',
                        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'))
    return parser


def spec_from_args(args: argparse.Namespace) -> SweepSpec:
    """Merge defaults, the optional config file and flags into a SweepSpec."""
    settings: Dict[str, Any] = {}
    if args.config:
        if not args.config.exists():
            raise FileNotFoundError(f"Config file not found: {args.config}")
        with open(args.config) as f:
            settings = json.load(f)
        if not isinstance(settings, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")

    flags = {
        "policies": args.policy,
        "workload": args.workload,
        "trace_dir": args.trace_dir,
        "hosts": args.hosts,
        "vms": args.vms,
        "t_lows": args.tlow,
        "t_high": args.thigh,
        "base_seed": args.seed,
        "repetitions": args.reps,
        "slav_denominator": args.slav_denominator,
    }
    settings.update({k: v for k, v in flags.items() if v is not None})
    if args.vms is not None:
        settings["ratios"] = ()
    if args.load_underload is not None:
        params = dict(settings.get("policy_params", {}))
        params["load"] = {**params.get("load", {}), "underload": args.load_underload == "on"}
        settings["policy_params"] = params
    if args.power_table:
        tables = dict(settings.get("power_tables", {}))
        for item in args.power_table:
            model_id, sep, path = item.partition("=")
            if not (sep and model_id and path):
                raise ConfigError(f"--power-table: expected ID=FILE, got {item!r}")
            tables[model_id] = path
        settings["power_tables"] = tables

    if args.preset:
        return preset(args.preset, **settings)
    return SweepSpec.from_dict(settings)


def print_summary(table, spec: SweepSpec) -> None:
    ok = table[table["status"] == "ok"]
    print(f"\nSweep {spec.name}: {len(ok)}/{len(table)} runs ok")
    if len(ok) == 0:
        return
    summary = (
        ok.groupby(["policy", "t_low"])[["energy_kwh", "migrations", "slav", "mean_active_hosts"]]
        .mean()
        .reset_index()
    )
    print(summary.to_string(index=False, float_format=lambda v: f"{v:.4g}"))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        spec = spec_from_args(args)
        table = run_sweep(spec, args.out_dir, jobs=args.jobs,
                          event_log_dir=str(args.event_log) if args.event_log else None)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    print_summary(table, spec)
    print(f"Results: {args.out_dir / 'results.csv'}")

    if args.emit_plots or args.render:
        figures = spec.figures or ()
        if not figures:
            log.warning("sweep %s has no associated figures; nothing to emit", spec.name)
        for figure in figures:
            try:
                emit_plot_data(table, figure, args.out_dir)
                if args.render:
                    from .viz import render_figure
                    render_figure(figure, args.out_dir)
            except PlotDataError as e:
                print(f"error: {e}", file=sys.stderr)
                return 1

    failed = int((table["status"] != "ok").sum())
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
