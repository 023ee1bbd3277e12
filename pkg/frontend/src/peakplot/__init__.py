"""Render figures from peakopt result directories.

Reads only the documented output files (trajectory.csv, history.csv,
run_summary.json, snapshots/*.csv) and never recomputes solver quantities.
"""

__version__ = "0.1.0"

from .figures import plot_history, plot_snapshots, plot_timeseries
from .reading import load_history, load_snapshots, load_summary, load_trajectory

__all__ = [
    "load_history",
    "load_snapshots",
    "load_summary",
    "load_trajectory",
    "plot_history",
    "plot_snapshots",
    "plot_timeseries",
]
