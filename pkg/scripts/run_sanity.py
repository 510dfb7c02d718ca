"""
End-to-End Sanity Check
=======================
Runs a small version of every pipeline stage:
  A. UW₂ solve         (exp1-shaped, coarse grid, short budget)
  B. Outputs           (run directory written and re-read by diagnose)
  C. UW₁ solve         (1D sample profiles vs the closed form)
  D. Densities         (PGM sample loads with the expected mass ordering)

Produces: artifacts/sanity_output.json
Called by: python cli.py sanity  OR  scripts/sanity_check.sh
"""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from uot.config import ARTIFACTS_DIR, SAMPLE_DENSITIES_DIR

SANITY_ITERATIONS = 3000


def run_sanity_check():
    from rich.console import Console

    from uot.densities import DensitySpec, make_density
    from uot.experiments import diagnose_run, parse_run_config, run
    from uot.grid import SpatialGrid, integrate
    from uot.solver.uw1 import uw1_closed_form_1d

    console = Console()
    console.print("\n[bold cyan]═══ Sanity Check — Solver Pipeline ═══[/bold cyan]\n")
    ARTIFACTS_DIR.mkdir(parents=True, exist_ok=True)
    output = {"uw2": {}, "outputs": {}, "uw1": {}, "densities": {}}
    errors = []

    # ── A. UW₂ ─────────────────────────────────────────────────────────────
    console.print("[bold]A. UW₂ solve[/bold]")
    run_dir = ARTIFACTS_DIR / "sanity_uw2"
    uw2_config = parse_run_config({
        "preset": "exp1", "n_t": 7, "n_x": 16, "iterations": SANITY_ITERATIONS,
        "report_every": 500, "output_dir": str(run_dir), "baseline": False,
    })
    with console.status("Solving exp1 on a 7×16 grid..."):
        summary = run(uw2_config)
    finite = all(math.isfinite(summary[k]) for k in ("objective", "dual", "gap", "continuity_residual"))
    console.print(f"  objective={summary['objective']:.5f} gap={summary['gap']:.2e} "
                  f"continuity={summary['continuity_residual']:.2e}")
    console.print(f"  [{'green' if finite else 'red'}]{'✓' if finite else '✗'} finite diagnostics[/]")
    output["uw2"] = {k: summary[k] for k in ("objective", "uw2", "dual", "gap", "continuity_residual",
                                             "mass_error_f", "converged", "iterations_run")}
    if not finite:
        errors.append("UW2: non-finite diagnostics")
    if summary["objective"] <= 0:
        errors.append("UW2: objective should be positive for translated densities")

    # ── B. Outputs ─────────────────────────────────────────────────────────
    console.print("\n[bold]B. Output round trip[/bold]")
    files = sorted(p.name for p in run_dir.iterdir())
    expected = {"mu_000.csv", "phi_006.csv", "mx_003.csv", "f.csv", "reports.csv",
                "summary.json", "config.json", "map.csv"}
    missing = sorted(expected - set(files))
    recomputed = diagnose_run(run_dir)
    drift = abs(recomputed["objective"] - summary["objective"])
    console.print(f"  {len(files)} files written; objective drift after re-read: {drift:.1e}")
    output["outputs"] = {"files": len(files), "missing": missing, "objective_drift": drift}
    if missing:
        errors.append(f"Outputs: missing {missing}")
    if drift > 1e-12:
        errors.append("Outputs: diagnose from files disagrees with the in-memory run")

    # ── C. UW₁ ─────────────────────────────────────────────────────────────
    console.print("\n[bold]C. UW₁ solve[/bold]")
    uw1_config = parse_run_config({
        "preset": "exp5", "n_x": 32, "iterations": 20_000, "report_every": 500,
        "output_dir": str(ARTIFACTS_DIR / "sanity_uw1"),
    })
    with console.status("Solving exp5 profiles..."):
        uw1_summary = run(uw1_config)
    space = SpatialGrid(1, 32)
    exact = uw1_closed_form_1d(make_density(uw1_config.mu0, space),
                               make_density(uw1_config.mu1, space), uw1_config.alpha)
    rel = abs(uw1_summary["uw1"] - exact) / exact
    console.print(f"  UW₁={uw1_summary['uw1']:.6f} closed form={exact:.6f} (rel. error {rel:.1e})")
    output["uw1"] = {"value": uw1_summary["uw1"], "closed_form": exact, "relative_error": rel}
    if rel > 1e-2:
        errors.append("UW1: solver far from the closed form")

    # ── D. Densities ───────────────────────────────────────────────────────
    console.print("\n[bold]D. Image densities[/bold]")
    grid = SpatialGrid(2, 35, 35)
    masses = {}
    for name in ("shape_a.pgm", "shape_b.pgm"):
        rho = make_density(DensitySpec(kind="image", path=SAMPLE_DENSITIES_DIR / name), grid)
        masses[name] = integrate(rho, grid)
        console.print(f"  {name}: mass {masses[name]:.4f}, min {rho.min():.3f}, max {rho.max():.3f}")
    output["densities"] = masses
    if any(m <= 0 for m in masses.values()):
        errors.append("Densities: empty image density")

    output["errors"] = errors
    out_path = ARTIFACTS_DIR / "sanity_output.json"
    out_path.write_text(json.dumps(output, indent=2))

    if errors:
        console.print(f"\n[bold red]✗ {len(errors)} problem(s):[/bold red]")
        for e in errors:
            console.print(f"  [red]- {e}[/red]")
    else:
        console.print("\n[bold green]✓ Sanity check passed[/bold green]")
    console.print(f"[dim]Wrote {out_path}[/dim]\n")
    return output


if __name__ == "__main__":
    result = run_sanity_check()
    sys.exit(1 if result["errors"] else 0)
