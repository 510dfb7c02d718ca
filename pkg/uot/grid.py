"""
Staggered Space–Time Grid
=========================
Discretization of Ω = [0,1]^d (d = 1 or 2) and T = [0,1]:

  cells   Ω_(i,j) × T_(k)        μ, Φ      array shape (n_t, n_x[, n_y])
  x-faces Ω_(i-1/2,j) × T_(k)    m_x       array shape (n_t, n_x+1[, n_y])
  y-faces Ω_(i,j-1/2) × T_(k)    m_y       array shape (n_t, n_x, n_y+1)
  slabs   T_(k)                  f         array shape (n_t,)

Storage is time-major, so a single slab field[k] is contiguous.
Spatial axes are always the trailing ones: x is axis -dims, y is axis -1.
That lets every operator below act on a single slice or on a whole
space–time field without branching.

Boundary faces (i = 0, n_x and j = 0, n_y) carry zero flux.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from uot.errors import GridError


# ── Grids ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SpatialGrid:
    dims: int
    n_x:  int
    n_y:  int = 1          # ignored when dims == 1

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise GridError(f"dims must be 1 or 2, got {self.dims}")
        if self.n_x < 2:
            raise GridError(f"n_x must be >= 2, got {self.n_x}")
        if self.dims == 2 and self.n_y < 2:
            raise GridError(f"n_y must be >= 2 in 2D, got {self.n_y}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_x

    @property
    def dy(self) -> float:
        return 1.0 / self.n_y if self.dims == 2 else 1.0

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n_x,) if self.dims == 1 else (self.n_x, self.n_y)

    @property
    def x_face_shape(self) -> Tuple[int, ...]:
        return (self.n_x + 1,) if self.dims == 1 else (self.n_x + 1, self.n_y)

    @property
    def y_face_shape(self) -> Optional[Tuple[int, ...]]:
        return None if self.dims == 1 else (self.n_x, self.n_y + 1)

    @property
    def spatial_axes(self) -> Tuple[int, ...]:
        return (-1,) if self.dims == 1 else (-2, -1)

    def centers(self) -> Tuple[np.ndarray, ...]:
        """Cell-centre coordinates, broadcastable against a slice."""
        x = (np.arange(self.n_x) + 0.5) * self.dx
        if self.dims == 1:
            return (x,)
        y = (np.arange(self.n_y) + 0.5) * self.dy
        return (x[:, None], y[None, :])


@dataclass(frozen=True)
class TimeGrid:
    n_t: int

    def __post_init__(self):
        if self.n_t < 3:
            raise GridError(f"n_t must be >= 3, got {self.n_t}")

    @property
    def dt(self) -> float:
        return 1.0 / self.n_t

    def midpoints(self) -> np.ndarray:
        """t_k = (k + 1/2)Δt."""
        return (np.arange(self.n_t) + 0.5) * self.dt


@dataclass(frozen=True)
class Grids:
    space: SpatialGrid
    time:  TimeGrid

    @property
    def cell_shape(self) -> Tuple[int, ...]:
        return (self.time.n_t,) + self.space.shape

    @property
    def cell_measure(self) -> float:
        """ΔxΔyΔt."""
        return self.space.cell_volume * self.time.dt


# ── Fields ────────────────────────────────────────────────────────────────

@dataclass
class FaceField:
    """
    Staggered flux m = (m_x, m_y). Works for a single slab or the whole
    time range; y is None in 1D.
    """
    x: np.ndarray
    y: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, space: SpatialGrid, n_t: Optional[int] = None) -> "FaceField":
        lead = () if n_t is None else (n_t,)
        y = None if space.dims == 1 else np.zeros(lead + space.y_face_shape)
        return cls(x=np.zeros(lead + space.x_face_shape), y=y)

    def components(self) -> Tuple[np.ndarray, ...]:
        return (self.x,) if self.y is None else (self.x, self.y)

    def copy(self) -> "FaceField":
        return FaceField(self.x.copy(), None if self.y is None else self.y.copy())

    def slab(self, k: int) -> "FaceField":
        return FaceField(self.x[k], None if self.y is None else self.y[k])

    def is_finite(self) -> bool:
        return all(np.isfinite(c).all() for c in self.components())

    def _combine(self, other: "FaceField", op) -> "FaceField":
        y = None if self.y is None else op(self.y, other.y)
        return FaceField(op(self.x, other.x), y)

    def __add__(self, other: "FaceField") -> "FaceField":
        return self._combine(other, np.add)

    def __sub__(self, other: "FaceField") -> "FaceField":
        return self._combine(other, np.subtract)

    def __mul__(self, scalar: float) -> "FaceField":
        return FaceField(self.x * scalar, None if self.y is None else self.y * scalar)

    __rmul__ = __mul__


CellField = np.ndarray       # (n_t, n_x[, n_y]) or a single slice (n_x[, n_y])
SourceSeries = np.ndarray    # (n_t,)


def check_cell_field(values: np.ndarray, grids: Grids, name: str = "field") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != grids.cell_shape:
        raise GridError(f"{name} has shape {values.shape}, expected {grids.cell_shape}")
    return values


def check_slice(values: np.ndarray, space: SpatialGrid, name: str = "slice") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != space.shape:
        raise GridError(f"{name} has shape {values.shape}, expected {space.shape}")
    return values


def _slab(values: np.ndarray, k: int, n_t: int) -> np.ndarray:
    if not 0 <= k < n_t:
        raise GridError(f"time index {k} out of range [0, {n_t})")
    return values[k]


# ── Spatial operators ─────────────────────────────────────────────────────

def _face_difference(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Interior face differences with zero boundary faces along `axis`."""
    inner = np.diff(values, axis=axis) / h
    pad = [(0, 0)] * values.ndim
    pad[axis] = (1, 1)
    return np.pad(inner, pad)


def grad_field(phi: np.ndarray, space: SpatialGrid) -> FaceField:
    """∇Φ on faces for a slice or a whole field (boundary faces are zero)."""
    gx = _face_difference(phi, -space.dims, space.dx)
    gy = None if space.dims == 1 else _face_difference(phi, -1, space.dy)
    return FaceField(gx, gy)


def grad(phi: CellField, k: int, grids: Grids) -> FaceField:
    """∇_x, ∇_y half-index differences of Φ on slab k."""
    return grad_field(_slab(phi, k, grids.time.n_t), grids.space)


def divergence_field(m: FaceField, space: SpatialGrid) -> np.ndarray:
    """∇·m on cells for a slice or a whole field."""
    div = np.diff(m.x, axis=-space.dims) / space.dx
    if space.dims == 2:
        div = div + np.diff(m.y, axis=-1) / space.dy
    return div


def divergence(m: FaceField, k: int, grids: Grids) -> np.ndarray:
    n_t = grids.time.n_t
    if not 0 <= k < n_t:
        raise GridError(f"time index {k} out of range [0, {n_t})")
    return divergence_field(m.slab(k), grids.space)


def face_average_squared(m: FaceField, space: SpatialGrid) -> np.ndarray:
    """
    ‖m‖² at cell centres, each component taken as the mean of its two
    opposing faces: ((m_{i+1/2} + m_{i-1/2})/2)² + ((m_{j+1/2} + m_{j-1/2})/2)².
    This is the combination the μ-update cubic sees.
    """
    ax = -space.dims
    total = (0.5 * (_upper(m.x, ax) + _lower(m.x, ax))) ** 2
    if space.dims == 2:
        total = total + (0.5 * (_upper(m.y, -1) + _lower(m.y, -1))) ** 2
    return total


def face_mean_of_squares(m: FaceField, space: SpatialGrid) -> np.ndarray:
    """½(m_{i+1/2}² + m_{i-1/2}²) per axis, summed over axes."""
    ax = -space.dims
    total = 0.5 * (_upper(m.x, ax) ** 2 + _lower(m.x, ax) ** 2)
    if space.dims == 2:
        total = total + 0.5 * (_upper(m.y, -1) ** 2 + _lower(m.y, -1) ** 2)
    return total


def face_average(cells: np.ndarray, space: SpatialGrid) -> FaceField:
    """Sum of the two cells adjacent to each interior face (boundary faces 0)."""
    fx = _pair_sum(cells, -space.dims)
    fy = None if space.dims == 1 else _pair_sum(cells, -1)
    return FaceField(fx, fy)


def _pair_sum(values: np.ndarray, axis: int) -> np.ndarray:
    n = values.shape[axis]
    inner = (np.take(values, range(1, n), axis=axis)
             + np.take(values, range(0, n - 1), axis=axis))
    pad = [(0, 0)] * values.ndim
    pad[axis] = (1, 1)
    return np.pad(inner, pad)


def _upper(faces: np.ndarray, axis: int) -> np.ndarray:
    n = faces.shape[axis]
    return np.take(faces, range(1, n), axis=axis)


def _lower(faces: np.ndarray, axis: int) -> np.ndarray:
    n = faces.shape[axis]
    return np.take(faces, range(0, n - 1), axis=axis)


# ── Time operators ────────────────────────────────────────────────────────

def dt_u(u: CellField, time: TimeGrid) -> np.ndarray:
    """Forward / centred / backward difference of a density along axis 0."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != time.n_t:
        raise GridError(f"field has {u.shape[0]} slabs, grid has {time.n_t}")
    dt = time.dt
    out = np.empty_like(u)
    out[0] = (u[1] - u[0]) / dt
    out[1:-1] = (u[2:] - u[:-2]) / (2.0 * dt)
    out[-1] = (u[-1] - u[-2]) / dt
    return out


def dt_phi(phi: CellField, time: TimeGrid) -> np.ndarray:
    """
    ∂ₜΦ stencil chosen so that Σ_k Φ·dt_u(u) Δt = −Σ_k dt_phi(Φ)·u Δt.

    For n_t >= 4 the five cases k = 0, 1, interior, n_t-2, n_t-1 apply.
    For n_t = 3 the single middle slab is both k=1 and k=n_t-2 and the
    adjoint there is (Φ₂ − Φ₀)/Δt.
    """
    phi = np.asarray(phi, dtype=float)
    n_t = time.n_t
    if phi.shape[0] != n_t:
        raise GridError(f"field has {phi.shape[0]} slabs, grid has {n_t}")
    dt = time.dt
    out = np.empty_like(phi)
    out[0] = (phi[1] / 2.0 + phi[0]) / dt
    out[-1] = (-phi[-1] - phi[-2] / 2.0) / dt
    if n_t == 3:
        out[1] = (phi[2] - phi[0]) / dt
        return out
    out[1] = (phi[2] / 2.0 - phi[0]) / dt
    out[-2] = (phi[-1] - phi[-3] / 2.0) / dt
    if n_t > 4:
        out[2:-2] = (phi[3:-1] - phi[1:-3]) / (2.0 * dt)
    return out


# ── Quadrature ────────────────────────────────────────────────────────────

def integrate(values: np.ndarray, grid: Union[SpatialGrid, TimeGrid]) -> Union[float, np.ndarray]:
    """
    Cell-sum quadrature.

    SpatialGrid: sums the trailing spatial axes times ΔxΔy, so a slice gives
    a scalar and a whole field gives one value per slab.
    TimeGrid: Σ f_k Δt.
    """
    values = np.asarray(values, dtype=float)
    if isinstance(grid, TimeGrid):
        return float(values.sum() * grid.dt)
    total = values.sum(axis=grid.spatial_axes) * grid.cell_volume
    return float(total) if np.ndim(total) == 0 else total
