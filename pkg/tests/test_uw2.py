import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from uot.densities import DensitySpec, make_density
from uot.errors import ConfigError, SolverDivergenceError
from uot.grid import FaceField, dt_phi, integrate
from uot.solver.state import SolverConfig, SolverState
from uot.solver.uw2 import initial_state, pd_step_uw2, solve_classical, solve_uw2


@pytest.fixture
def small_config():
    return SolverConfig(alpha=10.0, tau1=1e-3, tau2=1e-1, max_iterations=60, report_every=20)


@pytest.fixture
def bumps(grids_1d):
    space = grids_1d.space
    mu0 = make_density(DensitySpec("gaussian", means=[0.3], variances=[0.02]), space)
    mu1 = make_density(DensitySpec("gaussian", means=[0.7], variances=[0.02], scale=1.5), space)
    return mu0, mu1


def _unit_state(grids):
    ones = np.ones(grids.cell_shape)
    return SolverState.from_primal(
        m=FaceField.zeros(grids.space, grids.time.n_t),
        mu=ones,
        f=np.zeros(grids.time.n_t),
        phi=np.zeros(grids.cell_shape),
    )


# ── Single step ───────────────────────────────────────────────────────────

@pytest.mark.parametrize("grids", ["grids_1d", "grids_2d"])
def test_identical_inputs_are_a_fixed_point(grids, small_config, request):
    grids = request.getfixturevalue(grids)
    state = _unit_state(grids)
    ones = np.ones(grids.space.shape)
    nxt = pd_step_uw2(state, ones, ones, small_config, grids)
    assert_allclose(nxt.mu, state.mu, rtol=0, atol=1e-14)
    assert_allclose(nxt.phi, 0.0, atol=1e-14)
    assert_allclose(nxt.f, 0.0, atol=1e-14)
    assert not nxt.m.x.any()


def test_f_update_with_spatially_constant_phi(grids_1d, small_config):
    state = _unit_state(grids_1d)
    state.f = np.linspace(-1.0, 1.0, grids_1d.time.n_t)
    state.phi = np.full(grids_1d.cell_shape, 0.4)
    ones = np.ones(grids_1d.space.shape)
    nxt = pd_step_uw2(state, ones, ones, small_config, grids_1d)
    a, t = small_config.alpha, small_config.tau1
    assert_allclose(nxt.f, a / (a + t) * (t * 0.4 + state.f), rtol=1e-14)


def test_mu_update_without_flux_is_positive_part(grids_1d, rng):
    config = SolverConfig(alpha=1.0, tau1=0.05, tau2=1e-2)
    state = _unit_state(grids_1d)
    state.mu = rng.uniform(0.0, 1.0, size=grids_1d.cell_shape)
    state.phi = rng.normal(scale=5.0, size=grids_1d.cell_shape)
    mu0, mu1 = state.mu[0].copy(), state.mu[-1].copy()
    nxt = pd_step_uw2(state, mu0, mu1, config, grids_1d)

    g = dt_phi(state.phi, grids_1d.time)
    expected = np.maximum(0.0, config.tau1 * g + state.mu)
    assert_allclose(nxt.mu[1:-1], expected[1:-1], rtol=0, atol=1e-12)
    assert_array_equal(nxt.mu[0], mu0)
    assert_array_equal(nxt.mu[-1], mu1)


def test_frozen_source_stays_zero(grids_1d, bumps, small_config):
    config = dataclasses.replace(small_config, freeze_source=True)
    state = initial_state(*bumps, config, grids_1d)
    for _ in range(5):
        state = pd_step_uw2(state, *bumps, config, grids_1d)
    assert not state.f.any()


def test_step_does_not_touch_input_state(grids_1d, bumps, small_config):
    state = initial_state(*bumps, small_config, grids_1d)
    before = state.copy()
    pd_step_uw2(state, *bumps, small_config, grids_1d)
    assert_array_equal(state.mu, before.mu)
    assert_array_equal(state.phi, before.phi)
    assert_array_equal(state.m.x, before.m.x)


def test_non_finite_iterate_names_the_update(grids_1d, small_config):
    state = _unit_state(grids_1d)
    state.phi[2, 3] = np.nan
    ones = np.ones(grids_1d.space.shape)
    with pytest.raises(SolverDivergenceError) as info:
        pd_step_uw2(state, ones, ones, small_config, grids_1d, iteration=7)
    assert info.value.update == "m"
    assert info.value.iteration == 7
    assert "iteration 7" in str(info.value)


# ── Initial state ─────────────────────────────────────────────────────────

def test_initial_source_matches_mass_change(grids_1d, bumps, small_config):
    state = initial_state(*bumps, small_config, grids_1d)
    assert_allclose(state.f, 0.5, rtol=1e-12)
    assert_array_equal(state.mu[0], bumps[0])
    assert_array_equal(state.mu[-1], bumps[1])


def test_three_stage_initial_path(grids_1d, bumps, small_config):
    config = dataclasses.replace(small_config, init_path="three_stage")
    state = initial_state(*bumps, config, grids_1d)
    assert integrate(state.f, grids_1d.time) == pytest.approx(0.5)
    assert_array_equal(state.mu[-1], bumps[1])


# ── Driver ────────────────────────────────────────────────────────────────

def test_identical_inputs_converge_to_zero(grids_1d, small_config):
    mu = make_density(DensitySpec("gaussian", means=[0.5], variances=[0.05]), grids_1d.space)
    result = solve_uw2(mu, mu, small_config, grids_1d)
    assert result.converged
    assert result.iterations_run == small_config.report_every
    assert result.objective <= 1e-4
    assert result.uw2 == pytest.approx(np.sqrt(2 * result.objective))


def test_invariants_hold_along_the_run(grids_2d, rng):
    space = grids_2d.space
    mu0 = make_density(DensitySpec("gaussian", means=[(0.3, 0.3)], variances=[0.05]), space)
    mu1 = make_density(DensitySpec("mixture", means=[(0.7, 0.6), (0.2, 0.8)], variances=[0.05, 0.05]), space)
    config = SolverConfig(alpha=1.0, tau1=1e-3, tau2=1e-1, max_iterations=40, report_every=10)
    result = solve_uw2(mu0, mu1, config, grids_2d)
    state = result.state

    assert (state.mu >= 0).all()
    assert_array_equal(state.mu[0], mu0)
    assert_array_equal(state.mu[-1], mu1)
    assert not state.m.x[:, 0].any() and not state.m.x[:, -1].any()
    assert not state.m.y[:, :, 0].any() and not state.m.y[:, :, -1].any()
    assert [r.iteration for r in result.reports] == [10, 20, 30, 40]
    assert not result.converged


def test_runs_are_deterministic(grids_1d, bumps, small_config):
    first = solve_uw2(*bumps, small_config, grids_1d)
    second = solve_uw2(*bumps, small_config, grids_1d)
    assert_array_equal(first.state.phi, second.state.phi)
    assert_array_equal(first.state.mu, second.state.mu)
    assert first.objective == second.objective
    assert first.reports and first.reports == second.reports


def test_discrete_growth_optimum_is_a_fixed_point(grids_1d, growth_optimum):
    state, mu0, mu1, alpha = growth_optimum
    config = SolverConfig(alpha=alpha, tau1=1e-3, tau2=1e-1)
    stepped = pd_step_uw2(state, mu0, mu1, config, grids_1d)
    assert_allclose(stepped.mu, state.mu, atol=1e-10)
    assert_allclose(stepped.f, state.f, atol=1e-10)
    assert_allclose(stepped.phi, state.phi, atol=1e-10)
    assert not stepped.m.x.any()


def test_solve_from_the_optimum_stops_at_the_first_report(grids_1d, growth_optimum):
    state, mu0, mu1, alpha = growth_optimum
    config = SolverConfig(alpha=alpha, tau1=1e-3, tau2=1e-1, max_iterations=50, report_every=5)
    result = solve_uw2(mu0, mu1, config, grids_1d, state=state)
    assert result.converged
    assert result.iterations_run == 5
    assert abs(result.reports[-1].gap) <= 1e-10


def test_classical_solver_keeps_f_at_zero(grids_1d, small_config):
    space = grids_1d.space
    mu0 = make_density(DensitySpec("gaussian", means=[0.3], variances=[0.02]), space)
    mu1 = make_density(DensitySpec("gaussian", means=[0.7], variances=[0.02]), space)
    result = solve_classical(mu0, mu1, small_config, grids_1d)
    assert not result.state.f.any()
    assert result.objective > 0


def test_solver_rejects_p1_and_negative_densities(grids_1d, bumps):
    with pytest.raises(ConfigError):
        solve_uw2(*bumps, SolverConfig(p=1, tau1=None, tau2=None), grids_1d)
    negative = -np.ones(grids_1d.space.shape)
    with pytest.raises(ConfigError) as info:
        solve_uw2(negative, bumps[1], SolverConfig(), grids_1d)
    assert info.value.key == "mu0"


@pytest.mark.parametrize(
    "kwargs, key",
    [
        ({"alpha": 0.0}, "alpha"),
        ({"tau1": None}, "tau1"),
        ({"tau2": -1.0}, "tau2"),
        ({"max_iterations": 0}, "iterations"),
        ({"p": 3}, "p"),
    ],
)
def test_config_validation(kwargs, key):
    with pytest.raises(ConfigError) as info:
        SolverConfig(**kwargs)
    assert info.value.key == key
