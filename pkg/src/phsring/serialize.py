"""CSV/JSON writers. Floats use the shortest decimal that round-trips."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .integrator import Trajectory

POSITION_DIGITS = 12


def fmt(x) -> str:
    """Shortest round-trip decimal for a float; plain ``str`` for ints."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def fmt_position(x: float) -> str:
    return f"{float(x):.{POSITION_DIGITS}g}"


def trajectory_header(n: int) -> list[str]:
    return ["t", *(f"q{i}" for i in range(1, n + 1)), *(f"p{i}" for i in range(1, n + 1)), "H", "pbar"]


def write_trajectory_csv(path: Path, tr: Trajectory) -> None:
    """Header ``t,q1..qN,p1..pN,H,pbar``; positions wrapped onto ``[0, L)``."""
    n = tr.Q.shape[1]
    q = tr.positions(wrap=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(n))
        for k in range(len(tr)):
            w.writerow(
                [fmt(tr.times[k])]
                + [fmt_position(x) for x in q[k]]
                + [fmt(x) for x in tr.p[k]]
                + [fmt(tr.hamiltonian[k]), fmt(tr.mean_velocity[k])]
            )


def read_trajectory_csv(path: Path) -> dict:
    """Parse a trajectory CSV into arrays keyed by column group."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array([[float(x) for x in r] for r in rows[1:]])
    n = (len(header) - 3) // 2
    if header != trajectory_header(n):
        raise ValueError(f"unexpected trajectory header: {header}")
    return {
        "t": body[:, 0],
        "q": body[:, 1 : n + 1],
        "p": body[:, n + 1 : 2 * n + 1],
        "H": body[:, 2 * n + 1],
        "pbar": body[:, 2 * n + 2],
    }


def write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if x is None else x if isinstance(x, str) else fmt(x) for x in row])


def write_matrix(path: Path, M: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(M):
            w.writerow([fmt(x) for x in row])


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _clean(x):
    # JSON has no inf/nan; emit them as strings
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def write_json(path: Path, doc: dict) -> None:
    text = json.dumps(_clean(json.loads(json.dumps(doc, default=_json_default))), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")
