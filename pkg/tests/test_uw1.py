import numpy as np
import pytest
from numpy.testing import assert_allclose

from uot.errors import ConfigError, GridError
from uot.grid import FaceField, SpatialGrid
from uot.solver.state import SolverConfig
from uot.solver.uw1 import cell_norm, default_step, shrink, solve_uw1, uw1_closed_form_1d


def _config(**kwargs):
    kwargs.setdefault("alpha", 100.0)
    return SolverConfig(p=1, tau1=None, tau2=None, **kwargs)


def _halves(n):
    left = np.r_[np.ones(n // 2), np.zeros(n - n // 2)]
    return left, left[::-1].copy()


# ── Closed form ───────────────────────────────────────────────────────────

def test_closed_form_identical_inputs(rng):
    mu = rng.uniform(size=20)
    assert uw1_closed_form_1d(mu, mu, alpha=3.0) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("alpha", [0.1, 1.0, 100.0])
def test_closed_form_pure_mass_change(alpha):
    assert uw1_closed_form_1d(np.ones(16), np.full(16, 2.0), alpha) == pytest.approx(1.0 / alpha)


def test_closed_form_tent():
    mu0, mu1 = _halves(8)
    assert uw1_closed_form_1d(mu0, mu1, alpha=1.0) == pytest.approx(0.25)


def test_closed_form_rejects_bad_inputs():
    with pytest.raises(GridError):
        uw1_closed_form_1d(np.ones(4), np.ones(5), 1.0)
    with pytest.raises(ConfigError):
        uw1_closed_form_1d(np.ones(4), np.ones(4), 0.0)


# ── Shrink ────────────────────────────────────────────────────────────────

def test_shrink_1d_is_soft_threshold():
    space = SpatialGrid(1, 4)
    m = FaceField(np.array([0.0, 0.5, -0.05, 2.0, 0.0]))
    assert_allclose(shrink(m, 0.1, space).x, [0.0, 0.4, 0.0, 1.9, 0.0])


def test_shrink_2d_scales_cell_pairs():
    space = SpatialGrid(2, 2, 2)
    m = FaceField.zeros(space)
    m.x[1, 0] = 3.0
    m.y[0, 1] = 4.0
    out = shrink(m, 1.0, space)
    # cell (0, 0) pairs x-face (1, 0) with y-face (0, 1): norm 5 → scale 4/5
    assert out.x[1, 0] == pytest.approx(2.4)
    assert out.y[0, 1] == pytest.approx(3.2)
    assert cell_norm(out, space)[0, 0] == pytest.approx(4.0)
    assert not out.x[0].any() and not out.x[-1].any()


def test_default_step_bounds_the_operator_norm():
    space = SpatialGrid(2, 16, 10)
    tau = default_step(space)
    assert tau == pytest.approx(min(space.dx, space.dy) / np.sqrt(8.0))
    assert tau * tau * 8.0 / min(space.dx, space.dy) ** 2 <= 1.0 + 1e-12


# ── Solver ────────────────────────────────────────────────────────────────

def test_identical_inputs_give_zero(rng):
    space = SpatialGrid(2, 6, 6)
    mu = rng.uniform(size=space.shape)
    result = solve_uw1(mu, mu, _config(max_iterations=50, report_every=10), space)
    assert result.value == pytest.approx(0.0, abs=1e-12)
    assert result.converged
    assert not result.flux.x.any() and not result.flux.y.any()


def test_uniform_mass_change():
    space = SpatialGrid(1, 12)
    result = solve_uw1(np.ones(12), np.full(12, 2.0), _config(max_iterations=20, report_every=5), space)
    assert result.value == pytest.approx(0.01)
    assert result.source == pytest.approx(1.0)
    assert not result.flux.x.any()


def test_solver_matches_closed_form_on_tent():
    space = SpatialGrid(1, 8)
    mu0, mu1 = _halves(8)
    config = SolverConfig(p=1, alpha=1.0, tau1=None, tau2=None,
                          max_iterations=20_000, tolerance=1e-8, report_every=500)
    result = solve_uw1(mu0, mu1, config, space)
    expected = uw1_closed_form_1d(mu0, mu1, alpha=1.0)
    assert result.value == pytest.approx(expected, rel=1e-2)
    assert result.residual < 1e-2


def test_solver_matches_closed_form_on_random_profiles(rng):
    n = 10
    mu0 = rng.uniform(0.2, 1.0, size=n)
    mu1 = rng.uniform(0.2, 1.5, size=n)
    config = SolverConfig(p=1, alpha=2.0, tau1=None, tau2=None,
                          max_iterations=30_000, tolerance=1e-9, report_every=500)
    result = solve_uw1(mu0, mu1, config, SpatialGrid(1, n))
    assert result.value == pytest.approx(uw1_closed_form_1d(mu0, mu1, 2.0), rel=1e-2)


def test_solver_requires_p1():
    with pytest.raises(ConfigError):
        solve_uw1(np.ones(4), np.ones(4), SolverConfig(p=2), SpatialGrid(1, 4))
