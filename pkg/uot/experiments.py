"""
Experiment Runner
=================
Turns a JSON run document (or a named preset) into solver runs and run
directories.

  parse_run_config()  JSON document → RunConfig, preset fields fill unset keys
  run()               one solve, or an α-sweep with one subdirectory per α
  diagnose_run()      recompute diagnostics from a run directory alone

Presets share one grid and optimisation setting
(n_t = 15, n_x = n_y = 35, 200,000 iterations, τ1 = 1e-3, τ2 = 1e-1, α = 100).
"""
from __future__ import annotations

import concurrent.futures
import copy
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from uot import analysis
from uot import config as cfg
from uot.densities import DensitySpec, make_density
from uot.errors import ConfigError, DensityFileError
from uot.grid import Grids, SpatialGrid, TimeGrid
from uot.outputs import read_fields, read_uw1_fields, write_json, write_outputs, write_uw1_outputs
from uot.solver.state import SolverConfig
from uot.solver.uw1 import solve_uw1, uw1_report
from uot.solver.uw2 import solve_classical, solve_uw2

logger = logging.getLogger(__name__)


# ── Presets ───────────────────────────────────────────────────────────────

_TABLE = {
    "alpha": 100.0, "n_t": 15, "n_x": 35, "n_y": 35,
    "tau1": 1e-3, "tau2": 1e-1, "iterations": 200_000,
}


# Bump width σ = 0.1. With σ² = 0.1 truncation on [0,1] dominates and exp1
# lands near 0.02 instead of ½(1/3)².
GAUSSIAN_VARIANCE = 0.01


def _gauss(*means, var=GAUSSIAN_VARIANCE, weights=None, scale=1.0) -> Dict[str, Any]:
    means = [list(m) if isinstance(m, tuple) else [m] for m in means]
    spec = {"kind": "gaussian" if len(means) == 1 else "mixture",
            "means": means, "variances": [[var]] * len(means), "scale": scale}
    if weights:
        spec["weights"] = list(weights)
    return spec


PRESETS: Dict[str, Dict[str, Any]] = {
    "exp1": {
        **_TABLE, "p": 2, "dims": 1,
        "mu0": _gauss(1 / 3), "mu1": _gauss(2 / 3),
        "baseline": True,
    },
    "exp2-balanced": {
        **_TABLE, "p": 2, "dims": 1,
        "mu0": _gauss(0.0, 1 / 3, weights=(0.5, 0.5)), "mu1": _gauss(2 / 3),
        "alpha_sweep": list(cfg.ALPHA_SWEEP),
    },
    "exp2-unbalanced": {
        **_TABLE, "p": 2, "dims": 1,
        "mu0": _gauss(0.0, 1 / 3), "mu1": _gauss(2 / 3),
        "alpha_sweep": list(cfg.ALPHA_SWEEP),
    },
    "exp3": {
        **_TABLE, "p": 2, "dims": 2,
        "mu0": _gauss((0.3, 0.3), (0.7, 0.3)), "mu1": _gauss((0.7, 0.7)),
    },
    "exp4": {
        **_TABLE, "p": 2, "dims": 2,
        "mu0": {"kind": "image", "path": "sample_densities/shape_a.pgm"},
        "mu1": {"kind": "image", "path": "sample_densities/shape_b.pgm", "scale": 1.5},
    },
    "exp5": {
        **_TABLE, "p": 1, "dims": 1, "tau1": None, "tau2": None,
        "mu0": {"kind": "csv", "path": "sample_densities/profile_a.csv"},
        "mu1": {"kind": "csv", "path": "sample_densities/profile_b.csv"},
    },
}

_REQUIRED = ("p", "alpha", "dims", "n_t", "n_x", "n_y", "mu0", "mu1", "tau1", "tau2", "iterations")


# ── Config ────────────────────────────────────────────────────────────────

@dataclass
class RunConfig:
    p:            int
    alpha:        float
    dims:         int
    n_t:          int
    n_x:          int
    mu0:          DensitySpec
    mu1:          DensitySpec
    iterations:   int
    n_y:          int = 1
    tau1:         Optional[float] = None
    tau2:         Optional[float] = None
    tolerance:    float = cfg.TOLERANCE
    report_every: int = cfg.REPORT_EVERY
    output_dir:   Path = cfg.OUTPUT_DIR
    preset:       str = "custom"
    alpha_sweep:  List[float] = field(default_factory=list)
    baseline:     bool = False          # also solve with f ≡ 0
    init_path:    str = "linear"
    workers:      int = 1

    @property
    def grids(self) -> Grids:
        return Grids(SpatialGrid(self.dims, self.n_x, self.n_y), TimeGrid(self.n_t))

    def solver_config(self, alpha: Optional[float] = None) -> SolverConfig:
        return SolverConfig(
            p=self.p,
            alpha=self.alpha if alpha is None else alpha,
            tau1=self.tau1,
            tau2=self.tau2,
            max_iterations=self.iterations,
            tolerance=self.tolerance,
            report_every=self.report_every,
            init_path=self.init_path,
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["output_dir"] = str(self.output_dir)
        for key in ("mu0", "mu1"):
            spec = data[key]
            spec["path"] = None if spec["path"] is None else str(spec["path"])
            spec["means"] = [list(m) for m in spec["means"]]
            spec["variances"] = [list(v) for v in spec["variances"]]
        return data


def _density(raw: Any, key: str, base: Path) -> DensitySpec:
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(key, "density must be an object with a 'kind'")
    unknown = set(raw) - {"kind", "means", "variances", "weights", "path", "scale"}
    if unknown:
        raise ConfigError(key, f"unknown density field(s) {sorted(unknown)}")
    spec = DensitySpec(**raw)
    if spec.path is not None:
        if not spec.path.is_absolute():
            spec.path = base / spec.path
        if not spec.path.exists():
            raise DensityFileError(spec.path, "file not found")
    return spec


def parse_run_config(document: Dict[str, Any], base_dir: Optional[Path] = None) -> RunConfig:
    """
    Preset values fill keys the document leaves out. Without a preset, every
    solver key must be present; the first missing one is named in the error.
    Relative density paths resolve against base_dir (the config file's folder).
    """
    if not isinstance(document, dict):
        raise ConfigError("config", "run config must be a JSON object")
    raw = copy.deepcopy(document)
    name = raw.get("preset", "custom")
    if name != "custom":
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        raw = {**copy.deepcopy(PRESETS[name]), **raw}
        # preset densities ship with the repository
        for key in ("mu0", "mu1"):
            if key not in document and raw[key].get("path"):
                raw[key]["path"] = str(cfg.BASE_DIR / raw[key]["path"])
    base_dir = Path.cwd() if base_dir is None else Path(base_dir)

    p = raw.get("p")
    for key in _REQUIRED:
        if key == "n_y" and raw.get("dims") != 2:
            continue
        if key in ("tau1", "tau2", "n_t") and p == 1:
            continue
        if key not in raw:
            raise ConfigError(key, "missing required key")

    known = set(RunConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")

    raw.setdefault("n_t", cfg.N_T)
    raw["mu0"] = _density(raw["mu0"], "mu0", base_dir)
    raw["mu1"] = _density(raw["mu1"], "mu1", base_dir)
    raw["output_dir"] = Path(raw.get("output_dir", cfg.OUTPUT_DIR))
    raw["alpha_sweep"] = [float(a) for a in raw.get("alpha_sweep") or []]
    try:
        run_config = RunConfig(**raw)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from exc

    if run_config.workers < 1:
        raise ConfigError("workers", "workers must be >= 1")
    for key in ("dims", "n_t", "n_x", "n_y", "iterations", "report_every"):
        if not isinstance(getattr(run_config, key), int):
            raise ConfigError(key, "must be an integer")
    run_config.mu0.validate(run_config.dims)
    run_config.mu1.validate(run_config.dims)
    # raises ConfigError on bad solver settings before any work starts
    run_config.solver_config()
    return run_config


def load_run_config(path: Path | str) -> RunConfig:
    path = Path(path)
    try:
        document = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError("config", f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return parse_run_config(document, base_dir=path.parent)


def preset_config(name: str, **overrides: Any) -> RunConfig:
    document = {"preset": name, **{k: v for k, v in overrides.items() if v is not None}}
    return parse_run_config(document)


# ── Running ───────────────────────────────────────────────────────────────

def _run_single(config: RunConfig, alpha: float, directory: Path) -> Dict[str, Any]:
    grids = config.grids
    space = grids.space
    mu0 = make_density(config.mu0, space)
    mu1 = make_density(config.mu1, space)
    solver = config.solver_config(alpha)
    started = time.perf_counter()

    if config.p == 1:
        result = solve_uw1(mu0, mu1, solver, space)
        summary: Dict[str, Any] = {
            "objective": result.value,
            "uw1": result.value,
            "dual": result.dual,
            "gap": result.value - result.dual,
            "continuity_residual": result.residual,
            "hj_violation": result.reports[-1].hj_violation,
            "source_integral": result.source,
            "converged": result.converged,
            "iterations_run": result.iterations_run,
        }
        summary["wall_seconds"] = time.perf_counter() - started
        write_uw1_outputs(result.flux, result.phi, mu0, mu1, result.source, summary,
                          space, directory, reports=result.reports)
    else:
        result = solve_uw2(mu0, mu1, solver, grids)
        diagnostics = analysis.diagnose(result.state, mu0, mu1, solver, grids).to_dict()
        diagnostics.pop("primal")
        summary = {"objective": result.objective, "uw2": result.uw2}
        summary.update({k: v for k, v in diagnostics.items() if v is not None})
        summary["source_integral"] = float(result.state.f.sum() * grids.time.dt)
        summary["converged"] = result.converged
        summary["iterations_run"] = result.iterations_run
        if config.baseline:
            summary["classical_objective"] = solve_classical(mu0, mu1, solver, grids).objective
        summary["wall_seconds"] = time.perf_counter() - started
        transport_map = analysis.transport_map_1d(result.state, grids) if space.dims == 1 else None
        write_outputs(result.state, summary, grids, directory,
                      reports=result.reports, transport_map=transport_map)

    echo = config.to_dict()
    echo.update(alpha=alpha, alpha_sweep=[], output_dir=str(directory))
    write_json(echo, directory / "config.json")
    return summary


def sweep_dirname(alpha: float) -> str:
    return f"alpha_{alpha:g}"


def run(config: RunConfig) -> Dict[str, Any]:
    """
    Solve and write outputs. Returns the summary, or for α-sweeps a dict with
    one summary per α and the path of sweep.csv. Unconverged runs are not
    errors; see summary["converged"].
    """
    directory = Path(config.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    logger.info("run %s (p=%d, dims=%d) → %s", config.preset, config.p, config.dims, directory)

    if not config.alpha_sweep:
        return _run_single(config, config.alpha, directory)

    summaries: Dict[float, Dict[str, Any]] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = {
            pool.submit(_run_single, config, alpha, directory / sweep_dirname(alpha)): alpha
            for alpha in config.alpha_sweep
        }
        for future in concurrent.futures.as_completed(futures):
            alpha = futures[future]
            summaries[alpha] = future.result()
            logger.info("sweep alpha=%g done: objective=%.6g", alpha, summaries[alpha]["objective"])

    rows = [
        {
            "alpha": alpha,
            "objective": s["objective"],
            "uw2": s.get("uw2", np.nan),
            "dual": s["dual"],
            "gap": s["gap"],
            "source_integral": s["source_integral"],
        }
        for alpha, s in sorted(summaries.items())
    ]
    sweep_path = directory / "sweep.csv"
    pd.DataFrame(rows).to_csv(sweep_path, index=False, float_format=cfg.CSV_FLOAT_FORMAT)
    return {"sweep": [dict(alpha=a, **summaries[a]) for a in sorted(summaries)], "sweep_csv": str(sweep_path)}


# ── Diagnose from files ───────────────────────────────────────────────────

def diagnose_run(directory: Path | str) -> Dict[str, Any]:
    """Recompute the summary diagnostics from the field files and config.json of a run."""
    directory = Path(directory)
    config_path = directory / "config.json"
    if not config_path.exists():
        raise ConfigError("run", f"{directory} has no config.json")
    document = json.loads(config_path.read_text())
    document["preset"] = "custom"
    config = parse_run_config(document, base_dir=directory)
    grids = config.grids
    space = grids.space

    if config.p == 1:
        flux, phi, mu0, mu1 = read_uw1_fields(directory, space)
        report = uw1_report(0, flux, phi, mu0, mu1, config.alpha, space)
        return {"objective": report.primal, "uw1": report.primal, "dual": report.dual,
                "gap": report.gap, "continuity_residual": report.continuity_residual,
                "hj_violation": report.hj_violation}

    state = read_fields(directory, grids)
    mu0, mu1 = state.mu[0].copy(), state.mu[-1].copy()
    solver = config.solver_config()
    diagnostics = analysis.diagnose(state, mu0, mu1, solver, grids).to_dict()
    objective = diagnostics.pop("primal")
    summary = {"objective": objective, "uw2": float(np.sqrt(max(2.0 * objective, 0.0)))}
    summary.update({k: v for k, v in diagnostics.items() if v is not None})
    return summary
