import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from uot.grid import FaceField, Grids, SpatialGrid, TimeGrid
from uot.solver.state import SolverState


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grids_1d():
    return Grids(SpatialGrid(1, 8), TimeGrid(5))


@pytest.fixture
def grids_2d():
    return Grids(SpatialGrid(2, 6, 5), TimeGrid(4))


@pytest.fixture
def growth_optimum(grids_1d):
    """
    Exact discrete optimum for μ0 ≡ 1 → μ1 ≡ 2 on the n_t = 5 grid with α = 4.

    Φ is flat in space with slabs (a, b, 2a, b, a): dt_phi vanishes on the
    free slabs, f = α∫Φ, and μ solves ∂ₜμ = f with m = 0.
    """
    alpha = 4.0
    s = alpha * grids_1d.time.dt
    a, b = 1.0 / (6.0 * s), 1.0 / (4.0 * s)
    slabs = np.array([a, b, 2.0 * a, b, a])
    levels = np.array([1.0, 7.0 / 6.0, 1.5, 11.0 / 6.0, 2.0])
    n_x = grids_1d.space.n_x
    state = SolverState.from_primal(
        m=FaceField.zeros(grids_1d.space, grids_1d.time.n_t),
        mu=np.repeat(levels[:, None], n_x, axis=1),
        f=alpha * slabs,
        phi=np.repeat(slabs[:, None], n_x, axis=1),
    )
    return state, np.ones(n_x), np.full(n_x, 2.0), alpha
