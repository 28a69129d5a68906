"""CSV and key-value text output.

Every float is written with 17 significant digits so that files round-trip
doubles exactly; header rows are mandatory.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .steady_state import Grid2D

RASTER_HEADER = ["nx", "ny", "lx", "ly"]


class FormatError(ValueError):
    """Malformed input file; the message carries the path and line number."""


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_raster(path: str | Path, field: np.ndarray, grid: Grid2D) -> None:
    """Cell field ``(nx, ny)``: a geometry header, then one row per ``i`` (row-major)."""
    field = np.asarray(field, dtype=float)
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RASTER_HEADER)
        w.writerow([grid.nx, grid.ny, fmt(grid.lx), fmt(grid.ly)])
        for row in field:
            w.writerow([fmt(x) for x in row])


def read_raster(path: str | Path) -> tuple[np.ndarray, Grid2D]:
    """Inverse of :func:`write_raster`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0] != RASTER_HEADER:
        raise FormatError(f"{path}:1: expected header {','.join(RASTER_HEADER)}")
    try:
        nx, ny = int(rows[1][0]), int(rows[1][1])
        grid = Grid2D(nx, ny, float(rows[1][2]), float(rows[1][3]))
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}:2: bad geometry row ({exc})") from None
    data = np.empty((nx, ny))
    if len(rows) != nx + 2:
        raise FormatError(f"{path}: expected {nx} data rows, found {len(rows) - 2}")
    for i, row in enumerate(rows[2:]):
        try:
            if len(row) != ny:
                raise ValueError(f"expected {ny} values, found {len(row)}")
            data[i] = [float(x) for x in row]
        except ValueError as exc:
            raise FormatError(f"{path}:{i + 3}: {exc}") from None
    return data, grid


def write_table(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([x if isinstance(x, str) else fmt(x) for x in row])


def read_table(path: str | Path, required: tuple[str, ...] = ()) -> dict[str, np.ndarray]:
    """Numeric CSV with a header row, returned column-wise.

    Raises
    ------
    FormatError
        On missing columns, ragged rows or non-numeric cells, naming the line.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty file (header row required)")
    header = rows[0]
    missing = [c for c in required if c not in header]
    if missing:
        raise FormatError(f"{path}:1: missing columns {missing}")
    data = np.empty((len(rows) - 1, len(header)))
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}:{k}: expected {len(header)} fields, found {len(row)}")
        try:
            data[k - 2] = [float(x) for x in row]
        except ValueError as exc:
            raise FormatError(f"{path}:{k}: {exc}") from None
    return {name: data[:, j] for j, name in enumerate(header)}


def trajectory_table(traj) -> tuple[list[str], list[list[float]]]:
    """Columns and rows of a :class:`viscostab.sim.Trajectory`."""
    cfg = traj.config
    header = ["t", "v_th", "v_mech", "v_neq"]
    header += [f"v_th_m[{m!r}]" for m in cfg.m_values]
    header += [f"y_th_mn[{m!r}:{n!r}]" for m, n in cfg.mn_pairs]
    header += ["zeta_int", "min_eig_B", "max_speed", "min_theta", "max_theta"]
    header += ["kinetic_sq", "psi_int", "budget_residual", "budget_rel", "div_rel", "min_zeta"]
    header += ["conduction", "transport", "heating", "dvth_fd"]
    res, rel = traj.budget()
    fd = traj.dvth_fd()
    kin, psi = traj.column("kinetic_sq"), traj.column("psi_int")
    rows = []
    for i, s in enumerate(traj.samples):
        d = s.diagnostics
        rows.append(
            [s.t, s.v_th, s.v_mech, s.v_neq, *s.v_th_m, *s.y_th_mn, s.zeta_int]
            + [d["min_eig_B"], d["max_speed"], d["min_theta"], d["max_theta"]]
            + [kin[i], psi[i], res[i], rel[i], d["div_rel"], d["min_zeta"]]
            + [*s.terms, fd[i]]
        )
    return header, rows


def write_trajectory(path: str | Path, traj) -> None:
    header, rows = trajectory_table(traj)
    write_table(path, header, rows)


def write_kv(path: str | Path | None, items) -> str:
    """``key = value`` lines; returns the text and writes it when ``path`` is given."""
    text = "".join(f"{k} = {v}\n" for k, v in items)
    if path is not None:
        Path(path).write_text(text)
    return text


def read_kv(path: str | Path) -> dict[str, str]:
    out = {}
    for k, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{k}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val
    return out
