"""Artifact writers: VTK legacy ASCII fields, CSV probes and tables, JSON reports."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .fem import DiscreteSpace, q1_basis
from .geometry import MultidomainMesh


def _fmt(v) -> str:
    return repr(float(v))


def node_values(space: DiscreteSpace, u, fill: float = 0.0) -> np.ndarray:
    """Values at every mesh node; nodes outside the space get ``fill``.

    For broken spaces the last piece containing a node wins.
    """
    out = np.full(space.mesh.n_nodes, fill)
    out[space.dof_node] = u
    return out


def point_values(space: DiscreteSpace, u, x, y) -> np.ndarray:
    """Evaluate a Q1 function at points (NaN where the containing cell is not in the space)."""
    mesh = space.mesh
    x, y = np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))
    i = np.clip(np.searchsorted(mesh.x, x, side="right") - 1, 0, mesh.nxg - 1)
    j = np.clip(np.searchsorted(mesh.y, y, side="right") - 1, 0, mesh.ny - 1)
    cell = j * mesh.nxg + i
    pos = space.cell_pos[cell]
    out = np.full(len(x), np.nan)
    ok = pos >= 0
    if ok.any():
        c = cell[ok]
        xi = 2 * (x[ok] - mesh.cell_x0[c]) / mesh.cell_hx[c] - 1
        eta = 2 * (y[ok] - mesh.cell_y0[c]) / mesh.cell_hy[c] - 1
        N, _ = q1_basis(np.column_stack([xi, eta]))
        out[ok] = np.einsum("pk,pk->p", N, np.asarray(u)[space.cell_dofs[pos[ok]]])
    return out


def write_vtk(path, mesh: MultidomainMesh, point_fields: dict, cell_fields: dict | None = None,
              vectors: dict | None = None, title: str = "pemfc fields") -> None:
    """Rectilinear grid in legacy ASCII VTK.

    ``point_fields`` / ``cell_fields`` map names to node / cell arrays; ``vectors``
    maps names to (vx, vy) node arrays.
    """
    nx, ny = len(mesh.x), len(mesh.y)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET RECTILINEAR_GRID",
             f"DIMENSIONS {nx} {ny} 1",
             f"X_COORDINATES {nx} double", " ".join(_fmt(v) for v in mesh.x),
             f"Y_COORDINATES {ny} double", " ".join(_fmt(v) for v in mesh.y),
             "Z_COORDINATES 1 double", "0.0",
             f"POINT_DATA {mesh.n_nodes}"]
    for name, (vx, vy) in (vectors or {}).items():
        lines.append(f"VECTORS {name} double")
        lines.extend(f"{_fmt(a)} {_fmt(b)} 0.0" for a, b in zip(vx, vy))
    for name, v in point_fields.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines.extend(_fmt(a) for a in v)
    cf = {"region": mesh.cell_sub.astype(float)}
    cf.update(cell_fields or {})
    lines.append(f"CELL_DATA {mesh.n_cells}")
    for name, v in cf.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines.extend(_fmt(a) for a in v)
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk_scalars(path) -> dict:
    """Scalar arrays of a file written by ``write_vtk`` (for round-trip checks)."""
    out, cur, rows = {}, None, []
    lines = Path(path).read_text().splitlines()
    k = 0
    while k < len(lines):
        ln = lines[k]
        if ln.startswith("SCALARS"):
            if cur:
                out[cur] = np.array(rows, float)
            cur, rows = ln.split()[1], []
            k += 2
            continue
        if ln.startswith(("CELL_DATA", "POINT_DATA", "VECTORS")):
            if cur:
                out[cur] = np.array(rows, float)
            cur, rows = None, []
        elif cur:
            rows.append(float(ln))
        k += 1
    if cur:
        out[cur] = np.array(rows, float)
    return out


def cell_average(mesh: MultidomainMesh, cell_of_q, w, values) -> np.ndarray:
    """Weighted average of quadrature values per cell (0 on cells without points)."""
    num = np.bincount(cell_of_q, weights=w * values, minlength=mesh.n_cells)
    den = np.bincount(cell_of_q, weights=w, minlength=mesh.n_cells)
    return np.divide(num, den, out=np.zeros(mesh.n_cells), where=den > 0)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dumps_report(report: dict) -> str:
    """Canonical JSON (sorted keys; non-finite floats as strings)."""
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def write_report(path, report: dict) -> None:
    Path(path).write_text(dumps_report(report))


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


def strip_volatile(report: dict, keys=("timestamp", "seconds", "elapsed")) -> dict:
    """Copy of a report without timing fields, for determinism comparisons."""
    if isinstance(report, dict):
        return {k: strip_volatile(v, keys) for k, v in report.items() if k not in keys}
    if isinstance(report, list):
        return [strip_volatile(v, keys) for v in report]
    return report


__all__ = ["node_values", "point_values", "write_vtk", "read_vtk_scalars", "cell_average", "write_csv", "read_csv",
           "dumps_report", "write_report", "load_report", "strip_volatile"]
