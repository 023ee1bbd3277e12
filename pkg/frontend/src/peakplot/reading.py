"""Readers for the solver's delimited output files."""

import csv
import json
import re
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """An input file does not match the documented output schema."""


def load_summary(run_dir):
    path = Path(run_dir) / "run_summary.json"
    if not path.exists():
        raise SchemaError(f"missing run summary: {path}")
    with open(path) as fh:
        summary = json.load(fh)
    for key in ("tau_star", "J_star", "model"):
        if key not in summary:
            raise SchemaError(f"{path}: missing key {key!r}")
    return summary


def load_trajectory(run_dir):
    """Columns of trajectory.csv as arrays, grouped by variable.

    Returns a dict with 's', 't', 'y' (rows x n), 'u' (rows x m),
    'p' (rows x n) and 'side' (list of strings).
    """
    path = Path(run_dir) / "trajectory.csv"
    if not path.exists():
        raise SchemaError(f"missing trajectory file: {path}")
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    expected_prefix = ["s", "t"]
    if header[:2] != expected_prefix or header[-1] != "side":
        raise SchemaError(f"{path}: unexpected header {header[:3]}...{header[-1:]}")

    def columns(prefix):
        idx = [i for i, name in enumerate(header) if re.fullmatch(rf"{prefix}_\d+", name)]
        if not idx:
            raise SchemaError(f"{path}: no {prefix}_* columns")
        return idx

    y_idx, u_idx, p_idx = columns("y"), columns("u"), columns("p")
    data = np.array([[float(c) for c in row[:-1]] for row in rows])
    return {
        "s": data[:, 0],
        "t": data[:, 1],
        "y": data[:, y_idx],
        "u": data[:, u_idx],
        "p": data[:, p_idx],
        "side": [row[-1] for row in rows],
    }


def load_history(run_dir):
    path = Path(run_dir) / "history.csv"
    if not path.exists():
        raise SchemaError(f"missing history file: {path}")
    with open(path) as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: empty iteration history")
    return {
        "phase": [r["phase"] for r in rows],
        "iteration": np.array([int(r["iteration"]) for r in rows]),
        "grad_norm_sq": np.array([float(r["grad_norm_sq"]) for r in rows]),
        "objective": np.array([float(r["objective"]) for r in rows]),
        "tau": np.array([float(r["tau"]) for r in rows]),
    }


def load_snapshots(run_dir):
    """All snapshot profiles, sorted by file index; each holds x, y, u, t."""
    snapdir = Path(run_dir) / "snapshots"
    files = sorted(snapdir.glob("snapshot_*.csv")) if snapdir.exists() else []
    if not files:
        raise SchemaError(f"no snapshot files under {snapdir}")
    out = []
    for path in files:
        lines = path.read_text().strip().split("\n")
        if not lines[0].startswith("#"):
            raise SchemaError(f"{path}: missing time comment line")
        t_match = re.search(r"t = ([0-9eE+.\-]+)", lines[0])
        if not t_match:
            raise SchemaError(f"{path}: cannot parse snapshot time")
        if lines[1].split(",") != ["x", "y", "u"]:
            raise SchemaError(f"{path}: unexpected snapshot header")
        data = np.array([[float(c) for c in line.split(",")] for line in lines[2:]])
        out.append(
            {"t": float(t_match.group(1)), "x": data[:, 0], "y": data[:, 1], "u": data[:, 2],
             "path": path}
        )
    return out
