"""CSV and JSON serialisation.

CSV files carry ``#``-prefixed ``key = value`` header lines, then a row of
column names, then rows of numbers written with 17 significant digits so
doubles round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import CauchyTrace, FieldSolution

__all__ = [
    "fmt",
    "write_csv",
    "read_csv",
    "write_json",
    "to_jsonable",
    "write_field_csv",
    "write_trace_csv",
    "write_kernel_csv",
]


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, columns: Mapping[str, np.ndarray], header: Mapping | None = None) -> Path:
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float).ravel() for k in names]
    n = {d.size for d in data}
    if len(n) != 1:
        raise ValueError(f"columns have different lengths: {sorted(n)}")
    lines = [f"# {k} = {v}" for k, v in (header or {}).items()]
    lines.append(",".join(names))
    lines.extend(",".join(fmt(v) for v in row) for row in zip(*data))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[dict, dict]:
    """Inverse of :func:`write_csv`: ``(header, columns)``."""
    header, names, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            header[key.strip()] = value.strip()
        elif names is None:
            names = [s.strip() for s in line.split(",")]
        else:
            rows.append([float(s) for s in line.split(",")])
    arr = np.array(rows, dtype=float).reshape(-1, len(names or []))
    return header, {k: arr[:, i] for i, k in enumerate(names or [])}


def to_jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_field_csv(sol: FieldSolution, path) -> Path:
    """Long format: one row per ``(x_i, t_n)`` pair."""
    X, T = np.meshgrid(sol.xgrid.nodes, sol.tgrid.nodes, indexing="ij")
    return write_csv(path, {"x": X, "t": T, "u": sol.values}, sol.echo())


def write_trace_csv(trace: CauchyTrace, path, echo: Mapping | None = None) -> Path:
    return write_csv(path, {"t": trace.tgrid.nodes, "u0": trace.u0, "du0": trace.du0}, echo)


def write_kernel_csv(K, path) -> Path:
    i, j = np.tril_indices(K.grid.n_nodes)
    x = K.grid.nodes
    return write_csv(path, {"x": x[i], "y": x[j], "K": K.values[i, j]}, K.diagnostics())
