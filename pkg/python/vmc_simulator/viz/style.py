"""
Dark report style for figure panels.
"""

import matplotlib
matplotlib.use("Agg")

COLORS = {
    'background': '#0d1117',
    'grid': '#30363d',
    'text': '#c9d1d9',
    'muted': '#8b949e',
}

# stable across figures so a policy keeps its color in every panel
POLICY_COLORS = {
    'mbfd': '#58a6ff',
    'ecocloud': '#2ea043',
    'granite': '#d29922',
    'load': '#bc8cff',
    'acs': '#f85149',
    'iqr': '#8b949e',
}


def dark_rc() -> dict:
    """rcParams for plt.rc_context; global matplotlib state is left alone."""
    bg, grid, text = COLORS['background'], COLORS['grid'], COLORS['text']
    return {
        'figure.facecolor': bg,
        'savefig.facecolor': bg,
        'axes.facecolor': bg,
        'axes.edgecolor': grid,
        'axes.labelcolor': text,
        'axes.titlecolor': text,
        'axes.grid': True,
        'grid.color': grid,
        'grid.alpha': 0.3,
        'grid.linestyle': '--',
        'text.color': text,
        'xtick.color': text,
        'ytick.color': text,
        'legend.facecolor': bg,
        'legend.edgecolor': grid,
        'font.size': 9,
        'legend.fontsize': 7,
    }


def policy_color(policy: str) -> str:
    return POLICY_COLORS.get(policy, COLORS['muted'])


def color_boxes(artists: dict, policies) -> None:
    """Tint box-plot artists (as returned by Axes.bxp) by policy."""
    for box, policy in zip(artists['boxes'], policies):
        box.set_color(policy_color(policy))
    for key in ('whiskers', 'caps'):
        for line in artists[key]:
            line.set_color(COLORS['muted'])
    for line in artists['medians']:
        line.set_color(COLORS['text'])
