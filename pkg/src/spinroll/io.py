"""Deterministic exports: trajectory tables, iteration logs, reports and plot data.

Every writer produces the same bytes for the same inputs: floats are written
with 17 significant digits, JSON keys are sorted and lines end with ``\\n``.
Plot data are plain CSV files meant for any external plotting tool.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .kinematics import CSV_COLUMNS, Trajectory, straightness

FLOAT_FMT = "{:.17g}"


def fmt(x) -> str:
    """17-significant-digit text of a number (``nan``/``inf`` spelled out)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FMT.format(x)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else fmt(v)
    return obj


def dumps(obj) -> str:
    """Canonical JSON text (sorted keys, no NaN literals)."""
    return json.dumps(_clean(obj), sort_keys=True, default=_json_default)


def table_csv(header, rows) -> str:
    """CSV text with a header row and 17-digit numbers."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool)
                    else v for v in row])
    return buf.getvalue()


def trajectory_csv(traj: Trajectory) -> str:
    """The trajectory table with the fixed export columns."""
    return table_csv(CSV_COLUMNS, traj.table())


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    return write_text(path, trajectory_csv(traj))


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Load an exported trajectory table as a column dictionary."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    return {name: body[:, i] for i, name in enumerate(header)}


def iteration_log_jsonl(log: list) -> str:
    """One canonical JSON object per planner iteration."""
    return "".join(dumps(rec) + "\n" for rec in log)


def write_plot_data(traj: Trajectory, log: list | None, out_dir) -> list[Path]:
    """Write ``plane_path.csv``, ``sphere_path.csv`` and (with a log) ``errors.csv``."""
    out = Path(out_dir)
    paths = [write_text(out / "plane_path.csv", table_csv(("x", "y"), traj.x[:, :2])),
             write_text(out / "sphere_path.csv", table_csv(("x", "y", "z"), traj.embedded))]
    if log is not None:
        rows = [(r["k"], r["e_n"], r["e_r"], r["e_p"], r["e_s"]) for r in log]
        paths.append(write_text(out / "errors.csv", table_csv(("k", "e_n", "e_r", "e_p", "e_s"), rows)))
    return paths


@dataclass
class PlanReport:
    """Summary of a planning run.

    ``wall_time`` is the only field that differs between repeated runs.
    """

    converged: bool
    iterations: int
    wall_time: float
    e_n: float | None = None
    e_r: float | None = None
    e_p: float | None = None
    e_s: float | None = None
    tolerances: dict = field(default_factory=dict)
    L_o: float | None = None
    L_s: float | None = None
    straightness: float | None = None
    tuning: dict | None = None
    reason: str = ""
    error: str | None = None
    d: float | None = None

    @classmethod
    def from_result(cls, result, goal, tolerances) -> "PlanReport":
        d = result.diagnostics
        traj = result.trajectory
        tol = {k: getattr(tolerances, k) for k in ("eps_n", "eps_r", "eps_p", "eps_s", "max_iters")}
        return cls(converged=result.converged, iterations=result.iterations, wall_time=result.wall_time,
                   e_n=d.e_n, e_r=d.e_r, e_p=d.e_p, e_s=d.e_s, tolerances=tol,
                   L_o=float(traj.s_sphere[-1]), L_s=float(traj.s_plane[-1]),
                   straightness=straightness(traj, goal),
                   tuning={k: v for k, v in asdict(result.tuning).items()}, reason=result.reason)

    @classmethod
    def failure(cls, exc: Exception) -> "PlanReport":
        return cls(converged=False, iterations=0, wall_time=0.0, error=type(exc).__name__, reason=str(exc),
                   d=getattr(exc, "d", None))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"


SUMMARY_COLUMNS = ("index", "name", "converged", "iterations", "e_n", "e_r", "e_p", "e_s", "L_o", "L_s",
                   "straightness", "error")


def batch_summary_csv(rows: list[tuple[int, str, PlanReport]]) -> str:
    """Aggregate reports in scenario order (wall time left out to keep it deterministic)."""
    body = []
    for idx, name, rep in rows:
        vals = [rep.e_n, rep.e_r, rep.e_p, rep.e_s, rep.L_o, rep.L_s, rep.straightness]
        body.append([str(idx), name, str(rep.converged).lower(), str(rep.iterations)]
                    + ["" if v is None else fmt(v) for v in vals] + [rep.error or ""])
    return table_csv(SUMMARY_COLUMNS, body)
