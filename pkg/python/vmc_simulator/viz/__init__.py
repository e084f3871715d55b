"""Visualization for sweep results"""
from .figures import render_figure
from .style import COLORS, POLICY_COLORS, dark_rc, policy_color

__all__ = ["render_figure", "dark_rc", "policy_color", "COLORS", "POLICY_COLORS"]
