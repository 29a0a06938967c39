"""Offline figure generation for hexrod experiment outputs.

Strictly file-driven: the functions here read the CSV tables emitted by
the hexrod CLI and never import the solver package.
"""

__version__ = "0.1.0"

from .figures import (PLOT_KINDS, SchemaError, plot_centerlines,
                      plot_force_height, plot_motor_ranges,
                      plot_trajectory_error, plot_workspace, render)

__all__ = [
    "PLOT_KINDS", "SchemaError", "render", "plot_centerlines",
    "plot_force_height", "plot_trajectory_error", "plot_workspace",
    "plot_motor_ranges",
]
