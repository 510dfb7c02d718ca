"""
Input Densities
===============
Builds the nonnegative densities μ0, μ1 of the experiments and the initial
density paths handed to the solver.

Kinds:
  gaussian  – one truncated Gaussian bump, normalized to unit discrete mass
  mixture   – weighted sum of such bumps
  uniform   – constant density with the requested mass
  image     – PGM (P2 ASCII or P5 binary) grayscale file
  csv       – comma-separated matrix, row-major, no header

Orientation of 2D files: file row r is the y index j, file column c is the
x index i. Field files written by uot.outputs use the same convention, so a
written μ slice can be fed back in as a csv density.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import numpy as np
import pandas as pd

from uot.errors import ConfigError, DensityFileError, GridError
from uot.grid import SpatialGrid, TimeGrid, check_slice, integrate

logger = logging.getLogger(__name__)

DensityKind = Literal["gaussian", "mixture", "uniform", "image", "csv"]


@dataclass
class DensitySpec:
    kind:      DensityKind
    means:     List[Tuple[float, ...]] = field(default_factory=list)   # one per component, in [0,1]^d
    variances: List[Tuple[float, ...]] = field(default_factory=list)   # σ² per axis, per component
    weights:   List[float] = field(default_factory=list)               # defaults to 1 per component
    path:      Optional[Path] = None                                   # image / csv only
    scale:     float = 1.0                                             # global mass scale

    def __post_init__(self):
        self.means = [tuple(float(v) for v in np.atleast_1d(m)) for m in self.means]
        self.variances = [tuple(float(v) for v in np.atleast_1d(s)) for s in self.variances]
        if not self.weights:
            self.weights = [1.0] * len(self.means)
        self.weights = [float(w) for w in self.weights]
        if self.path is not None:
            self.path = Path(self.path)

    def validate(self, dims: int) -> None:
        if self.kind not in ("gaussian", "mixture", "uniform", "image", "csv"):
            raise ConfigError("kind", f"unknown density kind {self.kind!r}")
        if self.scale < 0:
            raise ConfigError("scale", "mass scale must be >= 0")
        if self.kind in ("image", "csv"):
            if self.path is None:
                raise ConfigError("path", f"{self.kind} density needs a file path")
            return
        if self.kind == "uniform":
            return
        if not self.means:
            raise ConfigError("means", "at least one component is required")
        if self.kind == "gaussian" and len(self.means) != 1:
            raise ConfigError("means", "gaussian takes exactly one component; use mixture")
        if not (len(self.means) == len(self.variances) == len(self.weights)):
            raise ConfigError("weights", "means, variances and weights differ in length")
        for mean, var in zip(self.means, self.variances):
            if len(mean) != dims:
                raise ConfigError("means", f"mean {mean} does not have {dims} component(s)")
            if len(var) not in (1, dims):
                raise ConfigError("variances", f"variance {var} does not match dims={dims}")
            if any(not 0.0 <= v <= 1.0 for v in mean):
                raise ConfigError("means", f"mean {mean} lies outside [0,1]")
            if any(v <= 0 for v in var):
                raise ConfigError("variances", "variances must be > 0")
        if any(w < 0 for w in self.weights):
            raise ConfigError("weights", "weights must be >= 0")


# ── Generators ────────────────────────────────────────────────────────────

def _unit_gaussian(mean: Tuple[float, ...], var: Tuple[float, ...], grid: SpatialGrid) -> np.ndarray:
    """Gaussian bump on cell centres, divided by its own cell sum."""
    if len(var) == 1:
        var = var * grid.dims
    exponent = 0.0
    for centre, m, s2 in zip(grid.centers(), mean, var):
        exponent = exponent + (centre - m) ** 2 / (2.0 * s2)
    bump = np.broadcast_to(np.exp(-exponent), grid.shape).astype(float)
    return bump / integrate(bump, grid)


def make_density(spec: DensitySpec, grid: SpatialGrid) -> np.ndarray:
    """Discretize a DensitySpec on the spatial grid."""
    spec.validate(grid.dims)

    if spec.kind in ("image", "csv"):
        return load_grayscale(spec.path, grid, spec.scale)

    if spec.kind == "uniform":
        return np.full(grid.shape, spec.scale, dtype=float)

    rho = np.zeros(grid.shape)
    for mean, var, weight in zip(spec.means, spec.variances, spec.weights):
        rho += weight * _unit_gaussian(mean, var, grid)
    rho *= spec.scale
    logger.debug("density %s: %d component(s), mass %.6g", spec.kind, len(spec.means), integrate(rho, grid))
    return rho


# ── File ingestion ────────────────────────────────────────────────────────

_PGM_HEADER_RE = re.compile(
    rb"^(P[25])\s(?:\s*#.*[\r\n])*\s*"
    rb"(\d+)\s(?:\s*#.*[\r\n])*\s*"
    rb"(\d+)\s(?:\s*#.*[\r\n])*\s*"
    rb"(\d+)\s"
)


def read_pgm(path: Path | str) -> Tuple[np.ndarray, int]:
    """
    Parse a P2 or P5 PGM file. Returns (pixels as float rows × cols, maxval).
    """
    path = Path(path)
    if not path.exists():
        raise DensityFileError(path, "file not found")
    buffer = path.read_bytes()

    if buffer[:2] not in (b"P2", b"P5"):
        raise DensityFileError(path, f"unsupported magic number {buffer[:2]!r}")
    match = _PGM_HEADER_RE.match(buffer)
    if match is None:
        raise DensityFileError(path, "malformed PGM header")

    magic, width, height, maxval = match.groups()
    width, height, maxval = int(width), int(height), int(maxval)
    if width == 0 or height == 0:
        raise DensityFileError(path, "image has a zero dimension")
    if not 0 < maxval <= 65535:
        raise DensityFileError(path, f"maxval {maxval} out of range")

    count = width * height
    payload = buffer[match.end():]
    if magic == b"P2":
        tokens = re.sub(rb"#[^\r\n]*", b"", payload).split()
        if len(tokens) < count:
            raise DensityFileError(path, f"truncated payload: {len(tokens)} of {count} samples")
        pixels = np.array([int(t) for t in tokens[:count]], dtype=float)
    else:
        dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
        if len(payload) < count * dtype.itemsize:
            raise DensityFileError(path, f"truncated payload: {len(payload)} bytes for {count} samples")
        pixels = np.frombuffer(payload, dtype=dtype, count=count).astype(float)

    if (pixels > maxval).any():
        raise DensityFileError(path, "sample exceeds maxval")
    return pixels.reshape(height, width), maxval


def read_csv_matrix(path: Path | str) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DensityFileError(path, "file not found")
    try:
        frame = pd.read_csv(path, header=None, dtype=float, float_precision="round_trip")
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DensityFileError(path, f"unreadable CSV matrix ({exc})") from exc
    values = frame.to_numpy(dtype=float)
    if values.size == 0:
        raise DensityFileError(path, "empty CSV matrix")
    if not np.isfinite(values).all():
        raise DensityFileError(path, "CSV matrix has missing or non-finite entries")
    if (values < 0).any():
        raise DensityFileError(path, "CSV density has negative entries")
    return values


def _resample_nearest(rows: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Nearest-neighbour resampling of a (rows × cols) matrix onto the grid slice."""
    if grid.dims == 1:
        if 1 not in rows.shape:
            raise GridError(f"1D grid needs a single-row matrix, got shape {rows.shape}")
        line = rows.ravel()
        src = np.floor((np.arange(grid.n_x) + 0.5) * line.size / grid.n_x).astype(int)
        return line[src]
    height, width = rows.shape
    cols = np.floor((np.arange(grid.n_x) + 0.5) * width / grid.n_x).astype(int)
    rws = np.floor((np.arange(grid.n_y) + 0.5) * height / grid.n_y).astype(int)
    return rows[np.ix_(rws, cols)].T


def load_grayscale(path: Path | str, grid: SpatialGrid, scale: float) -> np.ndarray:
    """
    Density slice from a PGM or CSV file.

    PGM pixels map linearly from [0, maxval] to [0, scale]; CSV entries are
    density values and are multiplied by scale.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        values = read_csv_matrix(path) * scale
    else:
        pixels, maxval = read_pgm(path)
        values = pixels / maxval * scale
    density = _resample_nearest(values, grid)
    logger.debug("loaded %s → mass %.6g", path.name, integrate(density, grid))
    return np.ascontiguousarray(density, dtype=float)


# ── Initial paths ─────────────────────────────────────────────────────────

def linear_path(mu0: np.ndarray, mu1: np.ndarray, time: TimeGrid) -> np.ndarray:
    """μ(t_k) = (1 − t_k)μ0 + t_k μ1 at slab midpoints t_k = (k + ½)Δt."""
    mu0 = np.asarray(mu0, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    if mu0.shape != mu1.shape:
        raise GridError(f"endpoint shapes differ: {mu0.shape} vs {mu1.shape}")
    t = time.midpoints().reshape((-1,) + (1,) * mu0.ndim)
    return (1.0 - t) * mu0 + t * mu1


def three_stage_path(
    mu0: np.ndarray,
    mu1: np.ndarray,
    space: SpatialGrid,
    time: TimeGrid,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Transport–growth–transport path: μ0 → uniform(M0) on [0, ⅓),
    uniform(M0) → uniform(M1) on [⅓, ⅔), uniform(M1) → μ1 on [⅔, 1].
    The spatial moves are linear blends. Returns (μ path, source f) with the
    whole mass change carried by f on the middle slabs, ∫f dt = M1 − M0.
    """
    mu0 = check_slice(mu0, space, "mu0")
    mu1 = check_slice(mu1, space, "mu1")
    m0, m1 = integrate(mu0, space), integrate(mu1, space)
    t = time.midpoints()

    path = np.empty((time.n_t,) + space.shape)
    middle = (t >= 1.0 / 3.0) & (t < 2.0 / 3.0)
    for k, tk in enumerate(t):
        if tk < 1.0 / 3.0:
            s = 3.0 * tk
            path[k] = (1.0 - s) * mu0 + s * m0
        elif tk < 2.0 / 3.0:
            s = 3.0 * (tk - 1.0 / 3.0)
            path[k] = (1.0 - s) * m0 + s * m1
        else:
            s = 3.0 * (tk - 2.0 / 3.0)
            path[k] = (1.0 - s) * m1 + s * mu1

    f = np.zeros(time.n_t)
    if middle.any():
        f[middle] = (m1 - m0) / (middle.sum() * time.dt)
    else:
        f[:] = m1 - m0
    return path, f
