"""Deterministic report and snapshot writers.

Reports are JSON with keys in a fixed order and every float written with
17 significant digits, which round-trips IEEE doubles exactly.  Non-finite
floats are written as the strings "inf", "-inf" and "nan".
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ShapeError, TouchdownError
from .grid import Grid
from .profiles import Profile


class ReportIOError(TouchdownError, OSError):
    """Writing or reading an output file failed."""


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _encode(obj, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), 0)}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, 0) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_report(report) -> str:
    """Serialise a QuenchReport, SweepResult, BisectionResult or plain dict."""
    if not isinstance(report, dict):
        report = {"kind": type(report).__name__, **report.to_dict()}
    return _encode(report, 0) + "\n"


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def write_report(report, path) -> None:
    _write_text(path, dumps_report(report))


def snapshot_rows(times, xs, us):
    """Rows (t, x, u) sorted by (t, x); ``us`` has one row per time."""
    xs = np.asarray(xs, dtype=float)
    order = np.argsort(xs, kind="stable")
    rows = []
    for t in sorted(range(len(times)), key=lambda i: (times[i], i)):
        u = np.asarray(us[t], dtype=float)
        if u.shape != xs.shape:
            raise ShapeError("snapshot length does not match the node count")
        rows.extend((float(times[t]), float(xs[j]), float(u[j])) for j in order)
    return rows


def dumps_snapshots(times, xs, us) -> str:
    lines = ["t,x,u"]
    lines += [f"{format(t, '.17g')},{format(x, '.17g')},{format(u, '.17g')}"
              for t, x, u in snapshot_rows(times, xs, us)]
    return "\n".join(lines) + "\n"


def write_snapshots(traj, path) -> None:
    _write_text(path, dumps_snapshots(traj.snap_t, traj.grid.nodes, traj.snap_u))


def read_snapshots(path):
    """Inverse of write_snapshots: (times, x, u[t, node])."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0] != "t,x,u":
        raise ShapeError("snapshot CSV must start with the header t,x,u")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln], dtype=float).reshape(-1, 3)
    times = np.unique(data[:, 0])
    xs = data[data[:, 0] == times[0], 1]
    if data.shape[0] != times.size * xs.size:
        raise ShapeError("ragged snapshot CSV")
    return times, xs, data[:, 2].reshape(times.size, xs.size)


def write_profile_csv(profile: Profile, path) -> None:
    """A profile is stored as a single snapshot at t = 0 with u = f."""
    _write_text(path, dumps_snapshots([0.0], profile.grid.nodes, [profile.values]))


def read_profile_csv(grid: Grid, path) -> Profile:
    times, xs, vals = read_snapshots(path)
    if times.size != 1:
        raise ShapeError("profile CSV must hold exactly one time level")
    if xs.shape != grid.nodes.shape or not np.array_equal(xs, np.sort(grid.nodes)):
        raise ShapeError("profile CSV nodes do not match the grid")
    return Profile(grid, vals[0], "custom", {})
