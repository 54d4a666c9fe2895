"""CSV interchange for time-series signals and coefficient histories.

Signal files carry a ``t`` column followed by one ``kind@position`` column
per channel, e.g. ``t,acc@0.20625,acc@0.4125``. Floats are written with 17
significant digits so a write/read cycle reproduces every value exactly.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .timeseries import TimeSeriesMatrix

FLOAT_FMT = "%.17g"
TIME_JITTER = 1e-9


def _format_header(kind: str, positions) -> str:
    return ",".join(["t"] + [f"{kind}@{float(x)!r}" for x in positions])


def write_series(path, series: TimeSeriesMatrix) -> None:
    data = np.column_stack([series.times, series.values])
    header = _format_header(series.kind, series.positions)
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")


def _parse_header(line: str, path):
    cols = [c.strip() for c in line.strip().split(",")]
    if not cols or cols[0] != "t":
        raise DataError(f"{path}: first column must be 't', got {cols[:1]}")
    kinds, positions = set(), []
    for col in cols[1:]:
        kind, sep, pos = col.partition("@")
        if not sep:
            raise DataError(f"{path}: channel header {col!r} is not of the form kind@position")
        try:
            positions.append(float(pos))
        except ValueError:
            raise DataError(f"{path}: bad channel position in {col!r}") from None
        kinds.add(kind)
    if len(kinds) > 1:
        raise DataError(f"{path}: mixed channel kinds {sorted(kinds)}")
    if not positions:
        raise DataError(f"{path}: no signal channels")
    return kinds.pop(), np.array(positions)


def read_series(path) -> TimeSeriesMatrix:
    """Read and validate a signal file (uniform time column, no missing cells)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    header, _, body = text.partition("\n")
    kind, positions = _parse_header(header, path)
    if not body.strip():
        raise DataError(f"{path}: no samples")
    try:
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DataError(f"{path}: malformed or missing cells ({exc})") from exc
    if data.shape[0] == 0:
        raise DataError(f"{path}: no samples")
    if data.shape[1] != positions.size + 1:
        raise DataError(
            f"{path}: {data.shape[1]} columns but header names {positions.size + 1}"
        )
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: non-finite values")
    times = data[:, 0]
    check_uniform_times(times, path)
    return TimeSeriesMatrix(times, data[:, 1:], positions, kind)


def check_uniform_times(times, where="signal") -> float:
    if times.size < 2:
        return float("nan")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise DataError(f"{where}: time column is not strictly increasing")
    dt = (times[-1] - times[0]) / (times.size - 1)
    ideal = times[0] + dt * np.arange(times.size)
    if np.max(np.abs(times - ideal)) > TIME_JITTER * dt:
        raise DataError(f"{where}: time column is not uniformly sampled")
    return dt


def write_coefficients(path, traj) -> None:
    m = traj.lambda_history.shape[1]
    names = ["t"] + [f"lambda_{i}" for i in range(1, m + 1)]
    names += [f"lambda_dot_{i}" for i in range(1, m + 1)]
    data = np.column_stack([traj.times, traj.lambda_history, traj.lambda_dot_history])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")


def read_coefficients(path):
    """Return (times, lambda (T, m), lambda_dot (T, m))."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    m = (len(header) - 1) // 2
    return data[:, 0], data[:, 1:1 + m], data[:, 1 + m:]


def write_table(path, columns: dict) -> None:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")


def read_table(path) -> dict:
    with open(path) as fh:
        names = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {n: data[:, i] for i, n in enumerate(names)}


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
