#!/usr/bin/env python3
"""
Unnormalized OT – CLI Interface
===============================
Commands:
  solve --config <file>   Run a JSON run document
  preset --name <name>    Run a named experiment preset
  presets                 Print every preset's parameters
  diagnose --run <dir>    Recompute diagnostics from a run directory
  sanity                  Run end-to-end sanity check
  eval                    Run the acceptance harness

Exit codes: 0 done (converged or not), 2 bad config or density file,
3 numerical divergence.
"""
import json
import logging
import sys

import click
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from uot import config as cfg
from uot.errors import ConfigError, DensityFileError, GridError, SolverDivergenceError

console = Console()

EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _setup_logging(verbose: bool) -> None:
    level = logging.INFO if verbose else getattr(logging, cfg.LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=False, show_path=False)],
        force=True,
    )


def _fail(message: str, code: int) -> None:
    console.print(f"[red]✗ {message}[/red]")
    sys.exit(code)


def _print_summary(summary: dict, title: str) -> None:
    table = Table(title=title, box=box.ROUNDED, show_header=False)
    table.add_column("Key", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in summary.items():
        text = f"{value:.6g}" if isinstance(value, float) else str(value)
        table.add_row(key, text)
    console.print(table)


def _execute(run_config) -> None:
    from uot.experiments import run

    label = f"{run_config.preset} (p={run_config.p}, {run_config.dims}D, {run_config.iterations:,} iterations)"
    try:
        with console.status(f"Solving {label}..."):
            result = run(run_config)
    except SolverDivergenceError as exc:
        _fail(str(exc), EXIT_DIVERGED)
    except (ConfigError, DensityFileError, GridError) as exc:
        _fail(str(exc), EXIT_CONFIG)

    if "sweep" in result:
        table = Table(title=f"α-sweep → {result['sweep_csv']}", box=box.ROUNDED)
        for column in ("alpha", "objective", "gap", "∫f dt", "converged"):
            table.add_column(column, justify="right")
        for row in result["sweep"]:
            table.add_row(f"{row['alpha']:g}", f"{row['objective']:.6g}", f"{row['gap']:.3e}",
                          f"{row['source_integral']:.4g}", str(row["converged"]))
        console.print(table)
        return

    _print_summary(result, f"{run_config.preset} → {run_config.output_dir}")
    if result["converged"]:
        console.print("[bold green]✓ Converged[/bold green]")
    else:
        console.print("[yellow]⚠ Iteration budget exhausted before the stopping rule was met[/yellow]")


# ── CLI group ─────────────────────────────────────────────────────────────

@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log solver progress at INFO level")
def cli(verbose):
    """Unnormalized optimal transport: UW₁ / UW₂ solvers and diagnostics."""
    _setup_logging(verbose)


# ── solve ─────────────────────────────────────────────────────────────────

@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
              help="JSON run document")
def solve(config_path):
    """Run a JSON run document."""
    from uot.experiments import load_run_config

    try:
        run_config = load_run_config(config_path)
    except (ConfigError, DensityFileError, GridError) as exc:
        _fail(str(exc), EXIT_CONFIG)
    _execute(run_config)


# ── preset ────────────────────────────────────────────────────────────────

@cli.command()
@click.option("--name", required=True, help="exp1 | exp2-balanced | exp2-unbalanced | exp3 | exp4 | exp5")
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (default: $UOT_OUTPUT_DIR/<name>)")
@click.option("--iterations", type=int, default=None, help="Override the iteration budget")
@click.option("--workers", type=int, default=None, help="Parallel α-sweep entries")
def preset(name, output_dir, iterations, workers):
    """Run a named experiment preset."""
    from uot.experiments import preset_config

    try:
        run_config = preset_config(
            name,
            output_dir=output_dir or str(cfg.OUTPUT_DIR / name),
            iterations=iterations,
            workers=workers,
        )
    except (ConfigError, DensityFileError, GridError) as exc:
        _fail(str(exc), EXIT_CONFIG)
    _execute(run_config)


# ── presets ───────────────────────────────────────────────────────────────

@cli.command()
@click.option("--json", "as_json", is_flag=True, help="Print as JSON")
def presets(as_json):
    """Print every preset's grid and solver parameters."""
    from uot.experiments import PRESETS

    if as_json:
        click.echo(json.dumps(PRESETS, indent=2))
        return

    table = Table(title="Experiment presets", box=box.ROUNDED)
    columns = ("p", "dims", "n_t", "n_x", "n_y", "iterations", "tau1", "tau2", "alpha")
    table.add_column("preset", style="cyan")
    for column in columns:
        table.add_column(column, justify="right")
    table.add_column("μ0 / μ1")
    for preset_name, values in PRESETS.items():
        densities = f"{values['mu0']['kind']} / {values['mu1']['kind']}"
        if values.get("alpha_sweep"):
            densities += "  (α-sweep)"
        table.add_row(preset_name, *(str(values.get(c)) for c in columns), densities)
    console.print(table)


# ── diagnose ──────────────────────────────────────────────────────────────

@cli.command()
@click.option("--run", "run_dir", required=True, type=click.Path(file_okay=False, exists=True),
              help="Run directory written by solve/preset")
def diagnose(run_dir):
    """Recompute diagnostics from the files of a run directory."""
    from uot.experiments import diagnose_run

    try:
        with console.status("Reading fields and recomputing diagnostics..."):
            summary = diagnose_run(run_dir)
    except (ConfigError, DensityFileError, GridError) as exc:
        _fail(str(exc), EXIT_CONFIG)
    _print_summary(summary, f"Diagnostics: {run_dir}")


# ── eval ──────────────────────────────────────────────────────────────────

@cli.command()
@click.option("--report", is_flag=True, help="Save JSON report to artifacts/eval_report.json")
@click.option("--quick", is_flag=True, help="Reduced grids and budgets (smoke run)")
def eval(report, quick):
    """Run the acceptance harness."""
    from scripts.eval_harness import run_eval
    result = run_eval(save_report=report, quick=quick)
    sys.exit(0 if result["failed"] == 0 else 1)


# ── sanity ────────────────────────────────────────────────────────────────

@cli.command()
def sanity():
    """Run end-to-end sanity check → artifacts/sanity_output.json."""
    from scripts.run_sanity import run_sanity_check
    run_sanity_check()


if __name__ == "__main__":
    cli()
