"""CSV trajectories, JSON reports and two-column plot data."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .integrate import Trajectory


def fmt(v):
    return "" if v is None else format(float(v), ".17g")


def trajectory_columns(n):
    return (["t", "s_clock"] + [f"x{i}" for i in range(n)] + [f"v{i}" for i in range(n)]
            + ["r", "energy", "angular_momentum", "gamma", "region"])


def write_trajectory_csv(traj: Trajectory, path, time_is_clock=False):
    """Fixed-column CSV. ``s_clock`` holds the companion clock when the run carries one.

    With ``time_is_clock`` the run's own time variable is ``s`` and the clock
    column is physical time; columns are swapped so ``t`` is always physical.
    """
    n = traj.n
    diag = traj.diagnostics()
    clock = traj.clock
    ang = np.asarray(diag["angular_momentum"], dtype=float)
    if ang.ndim > 1:
        ang = np.linalg.norm(ang, axis=1)
    vel = traj.velocity
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_columns(n))
        for i in range(len(traj)):
            t, s = traj.t[i], (clock[i] if clock is not None else None)
            if time_is_clock and clock is not None:
                t, s = s, t
            row = [fmt(t), fmt(s)]
            row += [fmt(c) for c in traj.y[i, :n]]
            row += [fmt(c) for c in vel[i]]
            row += [fmt(math.hypot(*traj.y[i, :n])), fmt(diag["energy"][i]), fmt(ang[i]),
                    fmt(diag["gamma"][i] if diag["gamma"] is not None else None),
                    diag["region"][i] if diag["region"] is not None else ""]
            w.writerow(row)


def read_trajectory_csv(path):
    """Rows as dicts with floats (empty cells become None, region stays a string)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append({k: (v if k == "region" else (float(v) if v != "" else None)) for k, v in row.items()})
    return out


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path):
    Path(path).write_text(dumps(obj))


PLOT_PAIRS = ("theta-r", "t-energy_drift", "t-r", "t-angular_momentum")


def write_plot_data(traj: Trajectory, out_dir, pairs=PLOT_PAIRS):
    """One whitespace-separated two-column text file per requested pair."""
    out_dir = Path(out_dir)
    diag = traj.diagnostics()
    ang = np.asarray(diag["angular_momentum"], dtype=float)
    if ang.ndim > 1:
        ang = np.linalg.norm(ang, axis=1)
    columns = {
        "t": traj.t,
        "r": traj.r,
        "theta": np.unwrap(np.arctan2(traj.y[:, 1], traj.y[:, 0])),
        "energy_drift": diag["energy"] - diag["energy"][0],
        "angular_momentum": ang,
    }
    written = []
    for pair in pairs:
        a, b = pair.split("-", 1)
        if a not in columns or b not in columns:
            raise ValueError(f"unknown plot pair {pair!r}")
        path = out_dir / f"{a}_{b}.txt"
        np.savetxt(path, np.column_stack([columns[a], columns[b]]), fmt="%.17g", header=f"{a} {b}")
        written.append(str(path))
    return written
