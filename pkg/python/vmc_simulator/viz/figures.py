"""
Render emitted plot-data files as a 2x2 PNG panel per figure.
"""

import logging
from pathlib import Path
from typing import Union

import matplotlib.pyplot as plt
import pandas as pd

from ..exceptions import PlotDataError
from .style import color_boxes, dark_rc, policy_color

log = logging.getLogger(__name__)

PANELS = (
    ("energy", "Energy (kWh)"),
    ("migrations", "VM migrations"),
    ("active_hosts", "Active hosts"),
    ("slav", "SLAV"),
)

X_LABELS = {
    "t_low": "Lower utilization threshold",
    "ratio": "VMs per host",
    "hosts": "Number of hosts",
}


def render_figure(figure: str, data_dir: Union[str, Path], output_path: Union[str, Path, None] = None
                  ) -> Path:
    """
    Read <figure>_<metric>.dat files from data_dir and save a PNG.

    Line files become one line per policy; box files (a "policy" column
    with min/q1/median/q3/max) become box plots.

    Raises:
        PlotDataError: If a metric file is missing
    """
    data_dir = Path(data_dir)
    output_path = Path(output_path) if output_path else data_dir / f"{figure}.png"
    missing = [m for m, _ in PANELS if not (data_dir / f"{figure}_{m}.dat").exists()]
    if missing:
        raise PlotDataError(f"{figure}: plot-data files missing", missing)

    output_path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(dark_rc()):
        fig, axes = plt.subplots(2, 2, figsize=(10, 7))
        for ax, (metric, title) in zip(axes.flat, PANELS):
            frame = pd.read_csv(data_dir / f"{figure}_{metric}.dat", sep=" ")
            if "policy" in frame.columns:
                _box_panel(ax, frame)
            else:
                _line_panel(ax, frame)
            ax.set_title(title)
        fig.suptitle(figure)
        fig.tight_layout()
        fig.savefig(output_path, dpi=120)
        plt.close(fig)
    log.info("rendered %s", output_path)
    return output_path


def _line_panel(ax, frame: pd.DataFrame) -> None:
    x = frame.columns[0]
    for policy in frame.columns[1:]:
        ax.plot(frame[x], frame[policy], marker='o', markersize=3, linewidth=1.2,
                color=policy_color(policy), label=policy)
    ax.set_xlabel(X_LABELS.get(x, x))
    ax.legend(loc='best')


def _box_panel(ax, frame: pd.DataFrame) -> None:
    stats = [
        {"label": r["policy"], "whislo": r["min"], "q1": r["q1"], "med": r["median"],
         "q3": r["q3"], "whishi": r["max"], "mean": r["mean"], "fliers": []}
        for r in frame.to_dict("records")
    ]
    artists = ax.bxp(stats, showmeans=True, showfliers=False)
    color_boxes(artists, frame["policy"])
