"""
Run Outputs
===========
File layout of a run directory:
  - mu_{k:03}.csv, phi_{k:03}.csv   n_y rows × n_x columns (1D: one row)
  - mx_{k:03}.csv                   n_y rows × (n_x+1) columns
  - my_{k:03}.csv                   (n_y+1) rows × n_x columns (2D only)
  - f.csv                           one value per line
  - reports.csv                     convergence history, with header
  - map.csv                         x, M(x) (1D UW₂ only)
  - summary.json, config.json

All numbers are written with 17 significant digits, so read → write
reproduces the files byte for byte.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from uot import config as cfg
from uot.grid import FaceField, Grids, SpatialGrid
from uot.solver.state import IterationReport, SolverState

logger = logging.getLogger(__name__)


# ── Low level ─────────────────────────────────────────────────────────────

def _to_rows(values: np.ndarray, space: SpatialGrid) -> np.ndarray:
    """Array slice → file matrix (rows are y, columns are x)."""
    return values[None, :] if space.dims == 1 else values.T


def _from_rows(rows: np.ndarray, space: SpatialGrid) -> np.ndarray:
    return rows[0] if space.dims == 1 else rows.T


def write_matrix(values: np.ndarray, path: Path, header: Optional[List[str]] = None) -> None:
    try:
        pd.DataFrame(np.atleast_2d(values), columns=header).to_csv(
            path, header=header is not None, index=False, float_format=cfg.CSV_FLOAT_FORMAT,
        )
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


def read_matrix(path: Path) -> np.ndarray:
    try:
        frame = pd.read_csv(path, header=None, float_precision="round_trip")
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    return frame.to_numpy(dtype=float)


def write_json(payload: Dict[str, Any], path: Path) -> None:
    try:
        path.write_text(json.dumps(payload, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


# ── Fields ────────────────────────────────────────────────────────────────

def write_fields(state: SolverState, grids: Grids, directory: Path) -> List[Path]:
    space = grids.space
    written = []
    for k in range(grids.time.n_t):
        slab = state.m.slab(k)
        items = [("mu", state.mu[k]), ("phi", state.phi[k]), ("mx", slab.x)]
        if space.dims == 2:
            items.append(("my", slab.y))
        for name, values in items:
            path = directory / f"{name}_{k:03}.csv"
            write_matrix(_to_rows(values, space), path)
            written.append(path)
    path = directory / "f.csv"
    write_matrix(state.f[:, None], path)
    written.append(path)
    return written


def read_fields(directory: Path, grids: Grids) -> SolverState:
    """Rebuild (m, μ, f, Φ) from a run directory; the extrapolated triple is set equal to it."""
    directory = Path(directory)
    space, n_t = grids.space, grids.time.n_t
    state = SolverState.zeros(grids)
    for k in range(n_t):
        state.mu[k] = _from_rows(read_matrix(directory / f"mu_{k:03}.csv"), space)
        state.phi[k] = _from_rows(read_matrix(directory / f"phi_{k:03}.csv"), space)
        state.m.x[k] = _from_rows(read_matrix(directory / f"mx_{k:03}.csv"), space)
        if space.dims == 2:
            state.m.y[k] = _from_rows(read_matrix(directory / f"my_{k:03}.csv"), space)
    state.f[:] = read_matrix(directory / "f.csv").ravel()
    return SolverState.from_primal(state.m, state.mu, state.f, state.phi)


def write_reports(reports: Iterable[IterationReport], path: Path) -> None:
    rows = [r.row() for r in reports]
    frame = pd.DataFrame(rows, columns=IterationReport.columns())
    frame["iteration"] = frame["iteration"].astype(int)
    try:
        frame.to_csv(path, index=False, float_format=cfg.CSV_FLOAT_FORMAT)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


def read_reports(path: Path) -> List[IterationReport]:
    frame = pd.read_csv(path, float_precision="round_trip")
    return [IterationReport(**{k: (int(v) if k == "iteration" else float(v)) for k, v in row.items()})
            for row in frame.to_dict(orient="records")]


# ── Run directory ─────────────────────────────────────────────────────────

def write_outputs(
    state: SolverState,
    diagnostics: Dict[str, Any],
    grids: Grids,
    directory: Path | str,
    reports: Iterable[IterationReport] = (),
    transport_map: Optional[np.ndarray] = None,
) -> Path:
    """
    Write a UW₂ run. `diagnostics` becomes summary.json as given; callers
    merge objective, convergence and timing into it beforehand.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_fields(state, grids, directory)
    write_reports(reports, directory / "reports.csv")
    if transport_map is not None:
        (x,) = grids.space.centers()
        write_matrix(np.column_stack([x, transport_map]), directory / "map.csv", header=["x", "M"])
    write_json(diagnostics, directory / "summary.json")
    logger.info("wrote run outputs to %s", directory)
    return directory


def write_uw1_outputs(
    flux: FaceField,
    phi: np.ndarray,
    mu0: np.ndarray,
    mu1: np.ndarray,
    source: float,
    summary: Dict[str, Any],
    space: SpatialGrid,
    directory: Path | str,
    reports: Iterable[IterationReport] = (),
) -> Path:
    """UW₁ has no time axis: mu_000/mu_001 hold the endpoints and f.csv a single constant."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix(_to_rows(mu0, space), directory / "mu_000.csv")
    write_matrix(_to_rows(mu1, space), directory / "mu_001.csv")
    write_matrix(_to_rows(phi, space), directory / "phi_000.csv")
    write_matrix(_to_rows(flux.x, space), directory / "mx_000.csv")
    if space.dims == 2:
        write_matrix(_to_rows(flux.y, space), directory / "my_000.csv")
    write_matrix(np.array([[source]]), directory / "f.csv")
    write_reports(reports, directory / "reports.csv")
    write_json(summary, directory / "summary.json")
    logger.info("wrote UW1 outputs to %s", directory)
    return directory


def read_uw1_fields(directory: Path | str, space: SpatialGrid) -> Tuple[FaceField, np.ndarray, np.ndarray, np.ndarray]:
    """(flux, Φ, μ0, μ1) of a UW₁ run directory."""
    directory = Path(directory)
    flux = FaceField(_from_rows(read_matrix(directory / "mx_000.csv"), space))
    if space.dims == 2:
        flux.y = _from_rows(read_matrix(directory / "my_000.csv"), space)
    phi, mu0, mu1 = (_from_rows(read_matrix(directory / name), space)
                     for name in ("phi_000.csv", "mu_000.csv", "mu_001.csv"))
    return flux, phi, mu0, mu1


def read_summary(directory: Path | str) -> Dict[str, Any]:
    path = Path(directory) / "summary.json"
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
