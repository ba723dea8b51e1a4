"""Lossless CSV serialization of trajectories.

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly; flag columns are written as 0/1 integers.  Reading an
emitted file therefore reproduces the trajectory bit for bit, and equal
trajectories serialize to identical bytes.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .simulate import Trajectory

__all__ = ["write_trajectory_csv", "read_trajectory_csv", "trajectory_csv_bytes"]


def _format_value(value: float, is_flag: bool) -> str:
    if is_flag:
        return str(int(value))
    return format(value, ".17g")


def trajectory_csv_bytes(traj: Trajectory) -> bytes:
    names = traj.column_names
    n_flags = traj.n
    flag_start = len(names) - n_flags
    lines = [",".join(names)]
    matrix = traj.as_matrix()
    for row in matrix:
        lines.append(
            ",".join(
                _format_value(v, i >= flag_start) for i, v in enumerate(row)
            )
        )
    return ("\n".join(lines) + "\n").encode("ascii")


def write_trajectory_csv(traj: Trajectory, path: "str | Path") -> None:
    Path(path).write_bytes(trajectory_csv_bytes(traj))


def read_trajectory_csv(path: "str | Path") -> Trajectory:
    """Rebuild a trajectory from an emitted CSV file."""
    text = Path(path).read_text(encoding="ascii")
    lines = [line for line in text.splitlines() if line]
    if len(lines) < 3:
        raise ValueError("trajectory CSV needs a header and at least 2 rows")
    header = lines[0].split(",")
    n = sum(1 for name in header if re.fullmatch(r"x\d+", name))
    if n < 2:
        raise ValueError("header does not look like a trajectory CSV")
    matrix = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    if matrix.shape[1] != len(header):
        raise ValueError("row width does not match the header")
    t = matrix[:, 0]
    h = float(t[1] - t[0])
    cols = iter(range(1, len(header)))

    def take(count: int, flatten: bool = False) -> np.ndarray:
        idx = [next(cols) for _ in range(count)]
        out = matrix[:, idx]
        return out[:, 0] if flatten else out

    traj = Trajectory(
        n=n,
        h=h,
        t=t,
        x=take(n),
        xhat=take(n),
        xtilde=take(n - 1),
        fault=take(1, flatten=True),
        fhat=take(1, flatten=True),
        ftilde=take(1, flatten=True),
        thetatilde=take(1, flatten=True),
        e=take(n),
        e_f=take(1, flatten=True),
        flags=take(n).astype(np.int8),
    )
    expected = traj.column_names
    if header != expected:
        raise ValueError("column names do not match the trajectory layout")
    return traj
