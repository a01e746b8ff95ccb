"""Path CSV files and line-delimited JSON records.

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly and keeps repeated runs byte-identical.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .action import DiscretePath
from .errors import InvalidArgument

__all__ = ["fmt", "dumps_record", "write_records", "read_records", "write_path_csv", "read_path_csv"]


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _render(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_render(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_render(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def dumps_record(record: dict) -> str:
    return _render(record)


def write_records(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(dumps_record(rec) + "\n")


def read_records(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_path_csv(path, coefficients, time_horizon=1.0) -> None:
    """Header ``t,mode_1,...,mode_M``; one row per grid node."""
    c = np.asarray(coefficients, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    t = np.linspace(0.0, time_horizon, c.shape[0])
    with open(path, "w") as fh:
        fh.write(",".join(["t"] + [f"mode_{j}" for j in range(1, c.shape[1] + 1)]) + "\n")
        for ti, row in zip(t, c):
            fh.write(",".join([fmt(ti)] + [fmt(v) for v in row]) + "\n")


def read_path_csv(path) -> DiscretePath:
    """Read a path file; the time column must be a uniform grid starting at 0."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise InvalidArgument(f"{path}: empty path file")
    header = [h.strip() for h in lines[0].split(",")]
    M = len(header) - 1
    expected = ["t"] + [f"mode_{j}" for j in range(1, M + 1)]
    if M < 1 or header != expected:
        raise InvalidArgument(f"{path}: header must be {','.join(expected) or 't,mode_1,...'}")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()])
    if data.ndim != 2 or data.shape[1] != M + 1:
        raise InvalidArgument(f"{path}: every row needs {M + 1} values")
    t = data[:, 0]
    T = t[-1]
    if t[0] != 0.0 or not T > 0 or not np.allclose(t, np.linspace(0.0, T, t.size), rtol=0, atol=1e-12 * T):
        raise InvalidArgument(f"{path}: time column must be a uniform grid from 0")
    return DiscretePath(data[:, 1:], float(T))
