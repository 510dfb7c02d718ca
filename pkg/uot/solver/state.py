"""
Solver Types
============
SolverConfig  – step sizes, source weight α, iteration budget, stopping rule
SolverState   – primal–dual iterate (m, μ, f, Φ) plus the extrapolated triple
IterationReport – one row of the convergence history
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import List, Literal, Optional

import numpy as np

from uot import config as cfg
from uot.errors import ConfigError
from uot.grid import FaceField, Grids

InitPath = Literal["linear", "three_stage"]


@dataclass
class SolverConfig:
    p:              int = 2
    alpha:          float = cfg.ALPHA
    tau1:           Optional[float] = cfg.TAU1   # None → grid default (p = 1 only)
    tau2:           Optional[float] = cfg.TAU2
    max_iterations: int = cfg.ITERATIONS
    tolerance:      float = cfg.TOLERANCE
    report_every:   int = cfg.REPORT_EVERY
    freeze_source:  bool = False                 # f ≡ 0: classical dynamic OT
    init_path:      InitPath = "linear"

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ConfigError("p", f"only p = 1 or 2 is supported, got {self.p}")
        if not self.alpha > 0:
            raise ConfigError("alpha", "alpha must be > 0")
        for key in ("tau1", "tau2"):
            value = getattr(self, key)
            if value is None and self.p == 2:
                raise ConfigError(key, "step size is required for p = 2")
            if value is not None and not value > 0:
                raise ConfigError(key, "step size must be > 0")
        if self.max_iterations < 1:
            raise ConfigError("iterations", "iteration budget must be >= 1")
        if not self.tolerance > 0:
            raise ConfigError("tolerance", "tolerance must be > 0")
        if self.report_every < 1:
            raise ConfigError("report_every", "report stride must be >= 1")
        if self.init_path not in ("linear", "three_stage"):
            raise ConfigError("init_path", f"unknown initial path {self.init_path!r}")


@dataclass
class SolverState:
    m:      FaceField
    mu:     np.ndarray
    f:      np.ndarray
    phi:    np.ndarray
    m_bar:  FaceField
    mu_bar: np.ndarray
    f_bar:  np.ndarray

    @classmethod
    def from_primal(cls, m: FaceField, mu: np.ndarray, f: np.ndarray, phi: np.ndarray) -> "SolverState":
        """Start state whose extrapolated triple equals the primal iterate."""
        return cls(m=m, mu=mu, f=f, phi=phi, m_bar=m.copy(), mu_bar=mu.copy(), f_bar=f.copy())

    @classmethod
    def zeros(cls, grids: Grids) -> "SolverState":
        n_t = grids.time.n_t
        return cls.from_primal(
            m=FaceField.zeros(grids.space, n_t),
            mu=np.zeros(grids.cell_shape),
            f=np.zeros(n_t),
            phi=np.zeros(grids.cell_shape),
        )

    def copy(self) -> "SolverState":
        return SolverState(
            m=self.m.copy(), mu=self.mu.copy(), f=self.f.copy(), phi=self.phi.copy(),
            m_bar=self.m_bar.copy(), mu_bar=self.mu_bar.copy(), f_bar=self.f_bar.copy(),
        )


@dataclass
class IterationReport:
    iteration:           int
    primal:              float
    dual:                float
    gap:                 float
    continuity_residual: float
    hj_violation:        float
    mass_error_f:        float = 0.0

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> List[float]:
        return [getattr(self, name) for name in self.columns()]


@dataclass
class SolveResult:
    """What a solver run hands back: final state, history and the reported value."""
    state:          SolverState
    reports:        List[IterationReport] = field(default_factory=list)
    objective:      float = float("nan")   # J for p = 2, UW₁ for p = 1
    converged:      bool = False
    iterations_run: int = 0

    @property
    def uw2(self) -> float:
        """UW₂ = √(2J)."""
        return float(np.sqrt(max(2.0 * self.objective, 0.0)))
