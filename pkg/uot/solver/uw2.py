"""
UW₂ primal–dual solver
======================
Saddle point of the minimal-flux Lagrangian

    min_(m, μ, f)  max_Φ   ½∫∫‖m‖²/μ + (1/2α)∫f² + ∫∫Φ(∂ₜμ + ∇·m − f)

One iteration (pd_step_uw2):

  1. primal prox for m, μ and f, each reading the previous iterate and Φ
  2. extrapolation  (m̃, μ̃, f̃) = 2·new − old
  3. dual ascent    Φ ← Φ + τ2(∂ₜμ̃ + ∇·m̃ − f̃)

The first and last slabs of μ hold the endpoint densities and are never
updated.
"""
from __future__ import annotations

import dataclasses
import logging
from typing import Optional, Tuple

import numpy as np

from uot import analysis
from uot import config as cfg
from uot.densities import linear_path, three_stage_path
from uot.errors import ConfigError, SolverDivergenceError
from uot.grid import (
    FaceField,
    Grids,
    check_slice,
    divergence_field,
    dt_phi,
    dt_u,
    face_average,
    face_average_squared,
    grad_field,
    integrate,
)
from uot.solver.cubic import root_plus
from uot.solver.state import IterationReport, SolverConfig, SolveResult, SolverState

logger = logging.getLogger(__name__)


def _check_endpoints(mu0: np.ndarray, mu1: np.ndarray, grids: Grids) -> Tuple[np.ndarray, np.ndarray]:
    mu0 = check_slice(mu0, grids.space, "mu0")
    mu1 = check_slice(mu1, grids.space, "mu1")
    for name, values in (("mu0", mu0), ("mu1", mu1)):
        if (values < 0).any():
            raise ConfigError(name, "density has negative entries")
    return mu0, mu1


def _ensure_finite(values, update: str, iteration: Optional[int]) -> None:
    finite = values.is_finite() if isinstance(values, FaceField) else np.isfinite(values).all()
    if not finite:
        raise SolverDivergenceError(update, iteration)


# ── One iteration ─────────────────────────────────────────────────────────

def pd_step_uw2(
    state: SolverState,
    mu0: np.ndarray,
    mu1: np.ndarray,
    config: SolverConfig,
    grids: Grids,
    iteration: Optional[int] = None,
) -> SolverState:
    """Advance the iterate by one primal–dual step. `state` is not modified."""
    space, time = grids.space, grids.time
    tau1, tau2, alpha = config.tau1, config.tau2, config.alpha
    phi = state.phi

    # m: μ_face/(μ_face + 2τ1)·(τ1∇Φ + m), μ_face = sum of the two adjacent cells
    mu_face = face_average(state.mu, space)
    grad_phi = grad_field(phi, space)
    m_new = FaceField(
        *(mf / (mf + 2.0 * tau1) * (tau1 * g + m)
          for mf, g, m in zip(mu_face.components(), grad_phi.components(), state.m.components()))
    )
    _ensure_finite(m_new, "m", iteration)

    # μ: largest root of x³ − (τ1∂ₜΦ + μ)x² − (τ1/2)‖m̄‖² on interior slabs
    mu_new = state.mu.copy()
    b = -(tau1 * dt_phi(phi, time)[1:-1] + state.mu[1:-1])
    d = -0.5 * tau1 * face_average_squared(state.m, space)[1:-1]
    mu_new[1:-1] = np.maximum(root_plus(1.0, b, 0.0, d), 0.0)
    mu_new[0], mu_new[-1] = mu0, mu1
    _ensure_finite(mu_new, "mu", iteration)

    # f: α/(α + τ1)·(τ1∫Φ dx + f)
    if config.freeze_source:
        f_new = state.f.copy()
    else:
        f_new = alpha / (alpha + tau1) * (tau1 * integrate(phi, space) + state.f)
        _ensure_finite(f_new, "f", iteration)

    m_bar = 2.0 * m_new - state.m
    mu_bar = 2.0 * mu_new - state.mu
    f_bar = 2.0 * f_new - state.f

    source = f_bar.reshape((-1,) + (1,) * space.dims)
    phi_new = phi + tau2 * (dt_u(mu_bar, time) + divergence_field(m_bar, space) - source)
    _ensure_finite(phi_new, "phi", iteration)

    return SolverState(m=m_new, mu=mu_new, f=f_new, phi=phi_new,
                       m_bar=m_bar, mu_bar=mu_bar, f_bar=f_bar)


# ── Driver ────────────────────────────────────────────────────────────────

def initial_state(mu0: np.ndarray, mu1: np.ndarray, config: SolverConfig, grids: Grids) -> SolverState:
    """m = 0, Φ = 0, μ on the chosen initial path with pinned endpoints."""
    space, time = grids.space, grids.time
    if config.init_path == "three_stage":
        mu, f = three_stage_path(mu0, mu1, space, time)
    else:
        mu = linear_path(mu0, mu1, time)
        f = np.full(time.n_t, integrate(mu1, space) - integrate(mu0, space))
    mu[0], mu[-1] = mu0, mu1
    if config.freeze_source:
        f = np.zeros(time.n_t)
    return SolverState.from_primal(
        m=FaceField.zeros(space, time.n_t),
        mu=mu,
        f=f,
        phi=np.zeros(grids.cell_shape),
    )


def make_report(
    iteration: int,
    state: SolverState,
    mu0: np.ndarray,
    mu1: np.ndarray,
    config: SolverConfig,
    grids: Grids,
) -> IterationReport:
    primal = analysis.primal_objective(state, config, grids)
    dual = analysis.lagrangian_dual(state.phi, mu0, mu1, config.alpha, grids)
    violation, _ = analysis.hj_residual(state.phi, state.mu, cfg.SUPPORT_EPS, grids, interior_only=True)
    mass_f, _ = analysis.mass_identities(state, mu0, mu1, config.alpha, grids)
    return IterationReport(
        iteration=iteration,
        primal=primal,
        dual=dual,
        gap=primal - dual,
        continuity_residual=analysis.continuity_residual(state, grids),
        hj_violation=violation,
        mass_error_f=mass_f,
    )


def _converged(report: IterationReport, tolerance: float) -> bool:
    return (abs(report.gap) <= tolerance * (1.0 + abs(report.primal))
            and report.continuity_residual <= tolerance)


def solve_uw2(
    mu0: np.ndarray,
    mu1: np.ndarray,
    config: SolverConfig,
    grids: Grids,
    state: Optional[SolverState] = None,
) -> SolveResult:
    """
    Run pd_step_uw2 until the gap and continuity residual both fall below
    tolerance at a report stride, or the iteration budget runs out.

    result.objective is J = ½ΣΣ‖m‖²/μ ΔxΔyΔt + (1/2α)Σf²Δt; result.uw2 = √(2J).
    """
    if config.p != 2:
        raise ConfigError("p", "solve_uw2 needs p = 2")
    mu0, mu1 = _check_endpoints(mu0, mu1, grids)
    state = initial_state(mu0, mu1, config, grids) if state is None else state

    logger.info(
        "UW2 solve: n_t=%d grid=%s alpha=%g tau1=%g tau2=%g budget=%d%s",
        grids.time.n_t, grids.space.shape, config.alpha, config.tau1, config.tau2,
        config.max_iterations, " (source frozen)" if config.freeze_source else "",
    )

    result = SolveResult(state=state)
    for it in range(1, config.max_iterations + 1):
        state = pd_step_uw2(state, mu0, mu1, config, grids, iteration=it)
        if it % config.report_every and it != config.max_iterations:
            continue
        report = make_report(it, state, mu0, mu1, config, grids)
        result.reports.append(report)
        logger.debug("it=%d primal=%.6e gap=%.3e cont=%.3e hj=%.3e",
                     it, report.primal, report.gap, report.continuity_residual, report.hj_violation)
        if _converged(report, config.tolerance):
            result.converged = True
            result.iterations_run = it
            break
    else:
        result.iterations_run = config.max_iterations

    result.state = state
    result.objective = analysis.primal_objective(state, config, grids)
    if result.converged:
        logger.info("UW2 converged after %d iterations: J=%.6g", result.iterations_run, result.objective)
    else:
        logger.warning("UW2 did not converge in %d iterations (J=%.6g)", result.iterations_run, result.objective)
    return result


def solve_classical(mu0: np.ndarray, mu1: np.ndarray, config: SolverConfig, grids: Grids) -> SolveResult:
    """Balanced dynamic OT: the same iteration with f held at 0."""
    return solve_uw2(mu0, mu1, dataclasses.replace(config, freeze_source=True), grids)
