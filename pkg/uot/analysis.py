"""
Optimality Diagnostics
======================
Evaluates, on any solver state, the identities an optimal UW₂ triple
(m, μ, f) with multiplier Φ must satisfy:

  primal      J = ½∫∫‖m‖²/μ + (1/2α)∫f²
  dual        min over (m, μ, f) of the discrete Lagrangian at fixed Φ
              (endpoint form ∫Φ(1)μ1 − ∫Φ(0)μ0 − (α/2)∫(∫Φ dx)² dt reported beside it)
  continuity  ∂ₜμ + ∇·m − f = 0
  HJ          ∂ₜΦ + ½‖∇Φ‖² ≤ 0, with equality where μ > 0
  mass        ∫f dt = M1 − M0  and  α∫∫Φ = M1 − M0
  push-forward (1D)  μ1(M)M′ = μ0 + ∫f(tM′ + 1 − t)dt,  M = x + ∂ₓΦ(0,·) along characteristics

Nothing here modifies the state; violations are reported, never projected.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from uot import config as cfg
from uot.grid import (
    Grids,
    divergence_field,
    dt_phi,
    dt_u,
    face_average_squared,
    face_mean_of_squares,
    grad_field,
    integrate,
)
from uot.solver.state import SolverConfig, SolverState

logger = logging.getLogger(__name__)

_MAP_SWEEPS = 30


@dataclass
class Diagnostics:
    primal:                    float
    dual:                      float
    gap:                       float
    endpoint_dual:             float
    continuity_residual:       float
    hj_violation:              float
    hj_equality_error:         float
    mass_error_f:              float
    mass_error_phi:            float
    pushforward_residual:      Optional[float] = None   # 1D only
    pushforward_out_of_domain: Optional[float] = None
    hopf_lax_residual:         Optional[float] = None   # 1D only

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _broadcast_time(series: np.ndarray, grids: Grids) -> np.ndarray:
    return series.reshape((-1,) + (1,) * grids.space.dims)


# ── Objectives ────────────────────────────────────────────────────────────

def kinetic_energy(state: SolverState, grids: Grids, eps: float = cfg.DENSITY_EPS) -> float:
    """½ Σ ‖m_cell‖²/μ ΔxΔyΔt with F(0,0) = 0 and F(m,0) = +∞."""
    m_sq = face_average_squared(state.m, grids.space)
    empty = state.mu < eps
    infeasible = empty & (np.sqrt(m_sq) >= eps)
    if infeasible.any():
        logger.warning("%d cell(s) carry flux with zero density; kinetic term is +inf", int(infeasible.sum()))
        return float("inf")
    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.where(empty, 0.0, m_sq / np.where(empty, 1.0, state.mu))
    return 0.5 * float(density.sum()) * grids.cell_measure


def primal_objective(state: SolverState, config: SolverConfig, grids: Grids) -> float:
    source = 0.5 / config.alpha * integrate(state.f ** 2, grids.time)
    return kinetic_energy(state, grids) + source


def dual_objective(phi: np.ndarray, mu0: np.ndarray, mu1: np.ndarray, alpha: float, grids: Grids) -> float:
    """
    Continuous dual read off the grid: the first and last slabs of Φ stand in
    for Φ(0,·), Φ(1,·). Reported as endpoint_dual; the gap uses lagrangian_dual.
    """
    space = grids.space
    pairing = integrate(phi[-1] * mu1, space) - integrate(phi[0] * mu0, space)
    slab_mass = integrate(phi, space)
    return pairing - 0.5 * alpha * integrate(slab_mass ** 2, grids.time)


def lagrangian_dual(phi: np.ndarray, mu0: np.ndarray, mu1: np.ndarray, alpha: float, grids: Grids) -> float:
    """
    Minimum of the discrete Lagrangian over (m, μ, f) for fixed Φ, with μ
    pinned to μ0, μ1 on the end slabs:

        Σ_(k = 0, n_t−1) Σ μ_k(−dt_phi(Φ)_k − ½‖∇Φ_k‖²) ΔxΔyΔt − (α/2)Σ(∫Φ_k)²Δt

    The free slabs contribute nothing while ∂ₜΦ + ½‖∇Φ‖² ≤ 0 holds on them.
    hj_residual reports where it does not.
    """
    space, time = grids.space, grids.time
    r = -dt_phi(phi, time) - 0.5 * face_mean_of_squares(grad_field(phi, space), space)
    endpoints = (integrate(r[0] * mu0, space) + integrate(r[-1] * mu1, space)) * time.dt
    slab_mass = integrate(phi, space)
    return float(endpoints) - 0.5 * alpha * integrate(slab_mass ** 2, time)


def duality_gap(
    state: SolverState,
    mu0: np.ndarray,
    mu1: np.ndarray,
    config: SolverConfig,
    grids: Grids,
) -> float:
    """primal − lagrangian_dual; ≥ 0 on feasible states whose free slabs satisfy the HJ inequality."""
    return primal_objective(state, config, grids) - lagrangian_dual(state.phi, mu0, mu1, config.alpha, grids)


# ── Residuals ─────────────────────────────────────────────────────────────

def continuity_residual(state: SolverState, grids: Grids) -> float:
    """√(Σ (∂ₜμ + ∇·m − f)² ΔxΔyΔt)."""
    residual = (dt_u(state.mu, grids.time)
                + divergence_field(state.m, grids.space)
                - _broadcast_time(state.f, grids))
    return float(np.sqrt((residual ** 2).sum() * grids.cell_measure))


def _interior_rows(n_t: int) -> slice:
    """Slabs where dt_phi is the centred difference (the middle slab when n_t < 5)."""
    return slice(2, -2) if n_t >= 5 else slice(1, -1)


def hj_field(phi: np.ndarray, grids: Grids) -> np.ndarray:
    """∂ₜΦ + ½‖∇Φ‖², the squared face gradients averaged back to cells."""
    return dt_phi(phi, grids.time) + 0.5 * face_mean_of_squares(grad_field(phi, grids.space), grids.space)


def hj_residual(
    phi: np.ndarray,
    mu: np.ndarray,
    eps: float,
    grids: Grids,
    interior_only: bool = False,
) -> Tuple[float, float]:
    """
    Returns (max positive part of r over all cells,
             max |r| over cells with μ > eps).
    interior_only keeps the slabs where dt_phi is the centred difference
    (k = 2 … n_t−3; the middle slab when n_t < 5).
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    r = hj_field(phi, grids)
    if interior_only:
        rows = _interior_rows(grids.time.n_t)
        r, mu = r[rows], mu[rows]
    violation = float(np.maximum(r, 0.0).max())
    support = mu > eps
    equality = float(np.abs(r[support]).max()) if support.any() else 0.0
    return violation, equality


def mass_identities(
    state: SolverState,
    mu0: np.ndarray,
    mu1: np.ndarray,
    alpha: float,
    grids: Grids,
) -> Tuple[float, float]:
    """(∫f dt − ΔM, α∫∫Φ − ΔM) with ΔM = M1 − M0."""
    delta = integrate(mu1, grids.space) - integrate(mu0, grids.space)
    e1 = integrate(state.f, grids.time) - delta
    e2 = alpha * integrate(integrate(state.phi, grids.space), grids.time) - delta
    return float(e1), float(e2)


# ── 1D push-forward ───────────────────────────────────────────────────────

def _displacement_1d(state: SolverState, grids: Grids) -> np.ndarray:
    """
    Straight-characteristic displacement d(x): the mean of ∂ₓΦ_k(x + t_k d)
    over the interior slabs, solved by fixed-point sweeps from d = 0.
    """
    space, time = grids.space, grids.time
    (x,) = space.centers()
    rows = _interior_rows(time.n_t)
    t = time.midpoints()[rows]
    velocity = np.gradient(state.phi[rows], space.dx, axis=1)
    d = np.zeros_like(x)
    for _ in range(_MAP_SWEEPS):
        d = np.mean([np.interp(x + tk * d, x, vk) for tk, vk in zip(t, velocity)], axis=0)
    return d


def transport_map_1d(state: SolverState, grids: Grids) -> np.ndarray:
    """
    M(x) = x + ∂ₓΦ(0, x) at cell centres, with ∂ₓΦ(0, ·) carried along
    straight characteristics from the interior slabs.
    """
    if grids.space.dims != 1:
        raise ValueError("transport map is only evaluated in 1D")
    (x,) = grids.space.centers()
    return x + _displacement_1d(state, grids)


def _inside(M: np.ndarray) -> np.ndarray:
    return (M >= 0.0) & (M <= 1.0)


def pushforward_residual_1d(
    state: SolverState,
    mu0: np.ndarray,
    mu1: np.ndarray,
    grids: Grids,
) -> Tuple[float, float]:
    """
    L¹ norm of μ1(M)M′ − μ0 − Σ_k f_k(t_k M′ + 1 − t_k)Δt over cells whose
    image stays in [0,1]. Returns (residual, fraction of cells left out).
    """
    space, time = grids.space, grids.time
    (x,) = space.centers()
    M = transport_map_1d(state, grids)
    dM = np.gradient(M, space.dx)
    t = time.midpoints()

    source = (state.f[:, None] * (t[:, None] * dM[None, :] + (1.0 - t[:, None]))).sum(axis=0) * time.dt
    residual = np.interp(M, x, mu1) * dM - mu0 - source

    inside = _inside(M)
    out_fraction = 1.0 - inside.mean()
    if out_fraction > 0:
        logger.warning("push-forward: %.1f%% of cells map outside the domain", 100 * out_fraction)
    return float(np.abs(residual[inside]).sum() * space.dx), float(out_fraction)


def hopf_lax_residual_1d(state: SolverState, grids: Grids) -> float:
    """
    L¹ norm of Φ(t_b, x + t_b d) − Φ(t_a, x + t_a d) − ½|d|²(t_b − t_a) over
    in-domain cells, t_a and t_b the first and last interior slabs, d = M − x.
    """
    (x,) = grids.space.centers()
    M = transport_map_1d(state, grids)
    d = M - x
    rows = range(grids.time.n_t)[_interior_rows(grids.time.n_t)]
    a, b = rows[0], rows[-1]
    t = grids.time.midpoints()
    residual = (np.interp(x + t[b] * d, x, state.phi[b]) - np.interp(x + t[a] * d, x, state.phi[a])
                - 0.5 * d ** 2 * (t[b] - t[a]))
    inside = _inside(M)
    return float(np.abs(residual[inside]).sum() * grids.space.dx)


# ── Bundle ────────────────────────────────────────────────────────────────

def diagnose(
    state: SolverState,
    mu0: np.ndarray,
    mu1: np.ndarray,
    config: SolverConfig,
    grids: Grids,
) -> Diagnostics:
    primal = primal_objective(state, config, grids)
    dual = lagrangian_dual(state.phi, mu0, mu1, config.alpha, grids)
    violation, equality = hj_residual(state.phi, state.mu, cfg.SUPPORT_EPS, grids, interior_only=True)
    e1, e2 = mass_identities(state, mu0, mu1, config.alpha, grids)

    diagnostics = Diagnostics(
        primal=primal,
        dual=dual,
        gap=primal - dual,
        endpoint_dual=dual_objective(state.phi, mu0, mu1, config.alpha, grids),
        continuity_residual=continuity_residual(state, grids),
        hj_violation=violation,
        hj_equality_error=equality,
        mass_error_f=e1,
        mass_error_phi=e2,
    )
    if grids.space.dims == 1:
        diagnostics.pushforward_residual, diagnostics.pushforward_out_of_domain = (
            pushforward_residual_1d(state, mu0, mu1, grids)
        )
        diagnostics.hopf_lax_residual = hopf_lax_residual_1d(state, grids)
    return diagnostics
