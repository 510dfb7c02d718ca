"""
UW₁ solver
==========
With p = 1 the time variable integrates out and the source is constant, so
UW₁ reduces to a static minimal-flux problem

    UW₁ = min_m Σ‖m‖ΔxΔy + |Δ|/α   s.t.   ∇·m + g = 0,
    g = μ1 − μ0 + c,  c = M0 − M1,  Δ = M1 − M0.

Solved by PDHG on the Lagrangian Σ‖m‖ + ⟨Φ, ∇·m + g⟩:

    m ← shrink(m + τ1∇Φ, τ1)
    Φ ← Φ + τ2(g + ∇·(2m_new − m_old))

‖m‖ at cell (i, j) pairs the flux on its upper x-face (i+½, j) with the flux
on its upper y-face (i, j+½). Every interior face belongs to exactly one pair,
so the shrink is the exact prox of the discrete norm.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from uot.errors import ConfigError, GridError, SolverDivergenceError
from uot.grid import FaceField, SpatialGrid, check_slice, divergence_field, grad_field, integrate
from uot.solver.state import IterationReport, SolverConfig

logger = logging.getLogger(__name__)


@dataclass
class UW1Result:
    flux:           FaceField
    phi:            np.ndarray
    value:          float
    dual:           float
    residual:       float
    source:         float            # constant f = M1 − M0
    converged:      bool = False
    iterations_run: int = 0
    reports:        List[IterationReport] = field(default_factory=list)


def default_step(space: SpatialGrid) -> float:
    """τ = min(Δx, Δy)/√8, which keeps τ1τ2‖∇·‖² <= 1."""
    h = space.dx if space.dims == 1 else min(space.dx, space.dy)
    return h / np.sqrt(8.0)


# ── Cell pairing ──────────────────────────────────────────────────────────

def _paired(m: FaceField, space: SpatialGrid) -> Tuple[np.ndarray, ...]:
    """Upper-face components per cell; the last cell on each axis sees the zero boundary face."""
    parts = [np.take(m.x, range(1, space.n_x + 1), axis=-space.dims)]
    if space.dims == 2:
        parts.append(np.take(m.y, range(1, space.n_y + 1), axis=-1))
    return tuple(parts)


def _unpaired(parts: Tuple[np.ndarray, ...], space: SpatialGrid) -> FaceField:
    """Inverse of _paired; the boundary entries of the last cells are dropped."""
    m = FaceField.zeros(space)
    if space.dims == 1:
        m.x[1:-1] = parts[0][:-1]
    else:
        m.x[1:-1, :] = parts[0][:-1, :]
        m.y[:, 1:-1] = parts[1][:, :-1]
    return m


def cell_norm(m: FaceField, space: SpatialGrid) -> np.ndarray:
    return np.sqrt(sum(p ** 2 for p in _paired(m, space)))


def shrink(m: FaceField, tau: float, space: SpatialGrid) -> FaceField:
    """Block soft-thresholding: v ↦ max(1 − τ/‖v‖, 0)·v per cell pair."""
    parts = _paired(m, space)
    norm = np.sqrt(sum(p ** 2 for p in parts))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > tau, 1.0 - tau / np.where(norm > 0, norm, 1.0), 0.0)
    return _unpaired(tuple(scale * p for p in parts), space)


# ── Solver ────────────────────────────────────────────────────────────────

def _balanced_source(mu0: np.ndarray, mu1: np.ndarray, alpha: float, space: SpatialGrid) -> Tuple[np.ndarray, float]:
    """g = μ1 − μ0 + c with c = M0 − M1, and the mass penalty |Δ|/α."""
    delta = integrate(mu1, space) - integrate(mu0, space)
    return mu1 - mu0 - delta, abs(delta) / alpha


def uw1_report(iteration: int, m: FaceField, phi: np.ndarray, mu0: np.ndarray, mu1: np.ndarray,
               alpha: float, space: SpatialGrid) -> IterationReport:
    """Value, dual, constraint residual and Lipschitz excess max(‖∇Φ‖ − 1, 0) of a UW₁ iterate."""
    g, penalty = _balanced_source(mu0, mu1, alpha, space)
    value = float(cell_norm(m, space).sum() * space.cell_volume) + penalty
    dual = integrate(phi * g, space) + penalty
    residual = float(np.sqrt(integrate((divergence_field(m, space) + g) ** 2, space)))
    lipschitz = float(np.maximum(cell_norm(grad_field(phi, space), space) - 1.0, 0.0).max())
    return IterationReport(iteration=iteration, primal=value, dual=dual, gap=value - dual,
                           continuity_residual=residual, hj_violation=lipschitz)


def solve_uw1(mu0: np.ndarray, mu1: np.ndarray, config: SolverConfig, space: SpatialGrid) -> UW1Result:
    if config.p != 1:
        raise ConfigError("p", "solve_uw1 needs p = 1")
    mu0 = check_slice(mu0, space, "mu0")
    mu1 = check_slice(mu1, space, "mu1")
    for name, values in (("mu0", mu0), ("mu1", mu1)):
        if (values < 0).any():
            raise ConfigError(name, "density has negative entries")

    tau1 = config.tau1 if config.tau1 is not None else default_step(space)
    tau2 = config.tau2 if config.tau2 is not None else default_step(space)
    delta = integrate(mu1, space) - integrate(mu0, space)
    g, _ = _balanced_source(mu0, mu1, config.alpha, space)

    logger.info("UW1 solve: grid=%s alpha=%g tau1=%.4g tau2=%.4g budget=%d",
                space.shape, config.alpha, tau1, tau2, config.max_iterations)

    m = FaceField.zeros(space)
    phi = np.zeros(space.shape)
    reports: List[IterationReport] = []
    converged = False
    iterations_run = config.max_iterations

    for it in range(1, config.max_iterations + 1):
        m_new = shrink(m + tau1 * grad_field(phi, space), tau1, space)
        if not m_new.is_finite():
            raise SolverDivergenceError("m", it)
        m_bar = 2.0 * m_new - m
        phi = phi + tau2 * (g + divergence_field(m_bar, space))
        if not np.isfinite(phi).all():
            raise SolverDivergenceError("phi", it)
        m = m_new

        if it % config.report_every and it != config.max_iterations:
            continue
        report = uw1_report(it, m, phi, mu0, mu1, config.alpha, space)
        reports.append(report)
        logger.debug("it=%d value=%.6e gap=%.3e residual=%.3e",
                     it, report.primal, report.gap, report.continuity_residual)
        if (abs(report.gap) <= config.tolerance * (1.0 + abs(report.primal))
                and report.continuity_residual <= config.tolerance):
            converged = True
            iterations_run = it
            break

    final = reports[-1]
    if not converged:
        logger.warning("UW1 did not converge in %d iterations (value=%.6g)", iterations_run, final.primal)
    return UW1Result(flux=m, phi=phi, value=final.primal, dual=final.dual,
                     residual=final.continuity_residual, source=delta,
                     converged=converged, iterations_run=iterations_run, reports=reports)


# ── 1D oracle ─────────────────────────────────────────────────────────────

def uw1_closed_form_1d(mu0: np.ndarray, mu1: np.ndarray, alpha: float) -> float:
    """
    Σ|F₁ − F₀ − xΔ|Δx + |Δ|/α with F cumulative cell sums, evaluated at the
    interior faces x = iΔx.
    """
    mu0 = np.asarray(mu0, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    if mu0.ndim != 1 or mu0.shape != mu1.shape:
        raise GridError(f"closed form needs two 1D slices of equal length, got {mu0.shape} and {mu1.shape}")
    if not alpha > 0:
        raise ConfigError("alpha", "alpha must be > 0")
    n = mu0.size
    dx = 1.0 / n
    F0 = np.cumsum(mu0) * dx
    F1 = np.cumsum(mu1) * dx
    delta = F1[-1] - F0[-1]
    x = np.arange(1, n) * dx
    integrand = np.abs(F1[:-1] - F0[:-1] - x * delta)
    return float(integrand.sum() * dx + abs(delta) / alpha)
