"""
Evaluation Harness
==================
Acceptance runs for the solvers and diagnostics. Each scenario is solved
once and scored by named checks:
  - Reproduction:  exp1 reference values (UW₂ and the f ≡ 0 baseline)
  - Oracles:       UW₁ closed form, cubic root bisection, discrete adjointness
  - Optimality:    duality gap, mass identities, HJ structure, push-forward
  - Metric:        identity, symmetry and triangle inequality at desk scale
  - Asymptotics:   α-sweep trends and the 2D source sign pattern

Scenarios marked long take minutes each and are skipped by --quick.

Run: python scripts/eval_harness.py
     python scripts/eval_harness.py --report     (saves eval_report.json)
     python scripts/eval_harness.py --quick      (fast scenarios only)
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from uot import analysis
from uot.densities import DensitySpec, make_density
from uot.experiments import GAUSSIAN_VARIANCE
from uot.grid import (
    FaceField, Grids, SpatialGrid, TimeGrid, divergence_field, dt_phi, dt_u, grad_field,
)
from uot.solver.cubic import root_plus
from uot.solver.state import SolverConfig
from uot.solver.uw1 import solve_uw1, uw1_closed_form_1d
from uot.solver.uw2 import solve_classical, solve_uw2

SEED = 20240601


# ── Test case schema ──────────────────────────────────────────────────────

@dataclass
class TestCase:
    id: str
    category: str          # "reproduction" | "oracle" | "optimality" | "metric" | "asymptotics"
    scenario: str          # key into SCENARIOS; shared scenarios are solved once
    checks: List[str]
    description: str = ""
    long: bool = False


@dataclass
class TestResult:
    id: str
    category: str
    passed: bool
    score: float
    checks_passed: List[str] = field(default_factory=list)
    checks_failed: List[str] = field(default_factory=list)
    notes: str = ""
    seconds: float = 0.0


TEST_CASES: List[TestCase] = [
    TestCase("REP-01", "reproduction", "exp1", ["objective_near_0055"],
             "exp1 UW₂ objective ≈ 0.055", long=True),
    TestCase("REP-02", "reproduction", "exp1", ["classical_near_0056"],
             "f ≡ 0 baseline ≈ 0.056 and ≈ ½(1/3)²", long=True),
    TestCase("ORC-01", "oracle", "uw1_oracle", ["uw1_matches_closed_form"],
             "UW₁ solver vs closed form on 20 random 1D pairs", long=True),
    TestCase("ORC-02", "oracle", "adjointness", ["adjoint_exact"],
             "dt_u/dt_phi and grad/div summation by parts"),
    TestCase("ORC-03", "oracle", "cubic", ["cubic_matches_bisection"],
             "root_plus vs bisection on 1000 solver-family cubics"),
    TestCase("MET-01", "metric", "metric_axioms", ["identity", "symmetry", "triangle"],
             "UW₁ and UW₂ metric axioms at n_t=9, n_x=16", long=True),
    TestCase("OPT-01", "optimality", "exp1", ["mass_identities"],
             "∫f dt and α∫∫Φ match M1 − M0 (balanced)", long=True),
    TestCase("OPT-02", "optimality", "exp1_unbalanced", ["mass_identities"],
             "∫f dt and α∫∫Φ match M1 − M0 (unbalanced)", long=True),
    TestCase("OPT-03", "optimality", "exp1", ["duality_gap", "gap_trend"],
             "final gap and gap monotonicity", long=True),
    TestCase("OPT-04", "optimality", "exp1", ["hj_structure"],
             "HJ inequality and equality on the support", long=True),
    TestCase("OPT-05", "optimality", "exp1", ["continuity", "pushforward"],
             "continuity and push-forward residuals", long=True),
    TestCase("ASY-01", "asymptotics", "exp2", ["balanced_flat", "unbalanced_grows"],
             "α-sweep trends (exp2 presets)", long=True),
    TestCase("ASY-02", "asymptotics", "exp3", ["source_sign_pattern"],
             "2D source positive first, then non-positive (exp3 preset)", long=True),
]


# ── Scenarios ─────────────────────────────────────────────────────────────

TABLE = dict(alpha=100.0, tau1=1e-3, tau2=1e-1, max_iterations=200_000, tolerance=1e-7, report_every=1000)


def _gaussian(space: SpatialGrid, *means, weights=None, scale=1.0) -> np.ndarray:
    means = [m if isinstance(m, tuple) else (m,) for m in means]
    kind = "gaussian" if len(means) == 1 else "mixture"
    spec = DensitySpec(kind=kind, means=means, variances=[(GAUSSIAN_VARIANCE,)] * len(means),
                       weights=list(weights or []), scale=scale)
    return make_density(spec, space)


def _uw2_scenario(mu0, mu1, grids, config, baseline=False) -> Dict[str, Any]:
    result = solve_uw2(mu0, mu1, config, grids)
    diag = analysis.diagnose(result.state, mu0, mu1, config, grids)
    out = {
        "objective": result.objective,
        "converged": result.converged,
        "gaps": [r.gap for r in result.reports],
        "primal": diag.primal,
        "diagnostics": diag.to_dict(),
    }
    if baseline:
        out["classical"] = solve_classical(mu0, mu1, config, grids).objective
    return out


def scenario_exp1() -> Dict[str, Any]:
    grids = Grids(SpatialGrid(1, 35), TimeGrid(15))
    mu0, mu1 = _gaussian(grids.space, 1 / 3), _gaussian(grids.space, 2 / 3)
    return _uw2_scenario(mu0, mu1, grids, SolverConfig(**TABLE), baseline=True)


def scenario_exp1_unbalanced() -> Dict[str, Any]:
    grids = Grids(SpatialGrid(1, 35), TimeGrid(15))
    mu0, mu1 = _gaussian(grids.space, 1 / 3), _gaussian(grids.space, 2 / 3, scale=1.5)
    return _uw2_scenario(mu0, mu1, grids, SolverConfig(**TABLE))


def _random_profile(rng: np.random.Generator, n: int) -> np.ndarray:
    """Piecewise-constant density with 2–6 pieces."""
    cuts = np.sort(rng.choice(np.arange(1, n), size=rng.integers(1, 6), replace=False))
    values = rng.uniform(0.1, 3.0, size=cuts.size + 1)
    return np.repeat(values, np.diff(np.concatenate([[0], cuts, [n]])))


def scenario_uw1_oracle() -> Dict[str, Any]:
    rng = np.random.default_rng(SEED)
    space = SpatialGrid(1, 64)
    config = SolverConfig(p=1, alpha=10.0, tau1=None, tau2=None,
                          max_iterations=100_000, tolerance=1e-9, report_every=500)
    errors = []
    for trial in range(20):
        mu0 = _random_profile(rng, 64)
        mu1 = _random_profile(rng, 64)
        if trial % 2 == 0:
            mu1 *= mu0.sum() / mu1.sum()
        exact = uw1_closed_form_1d(mu0, mu1, config.alpha)
        errors.append(abs(solve_uw1(mu0, mu1, config, space).value - exact) / max(exact, 1e-12))
    return {"relative_errors": errors}


def scenario_adjointness() -> Dict[str, Any]:
    rng = np.random.default_rng(SEED)
    worst_time = worst_space = 0.0
    for _ in range(100):
        n_t = int(rng.choice([3, 7, 15]))
        n_x = int(rng.choice([2, 8, 35]))
        time_grid = TimeGrid(n_t)
        u, phi = rng.normal(size=(2, n_t, n_x))
        lhs = (phi * dt_u(u, time_grid)).sum()
        rhs = -(dt_phi(phi, time_grid) * u).sum()
        worst_time = max(worst_time, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0))

        space = SpatialGrid(2, n_x, int(rng.choice([2, 8, 35])))
        phi2 = rng.normal(size=space.shape)
        m = FaceField.zeros(space)
        m.x[1:-1], m.y[:, 1:-1] = rng.normal(size=m.x[1:-1].shape), rng.normal(size=m.y[:, 1:-1].shape)
        g = grad_field(phi2, space)
        lhs = (phi2 * divergence_field(m, space)).sum() * space.cell_volume
        rhs = -((g.x * m.x).sum() + (g.y * m.y).sum()) * space.cell_volume
        worst_space = max(worst_space, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0))
    return {"time": worst_time, "space": worst_space}


def _bisection_root(b: float, d: float) -> float:
    lo, hi = 0.0, 1.0 + abs(b) + abs(d) ** (1.0 / 3.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid ** 3 + b * mid ** 2 + d > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def scenario_cubic() -> Dict[str, Any]:
    rng = np.random.default_rng(SEED)
    b = rng.uniform(-10.0, 10.0, 1000)
    d = rng.uniform(-10.0, 0.0, 1000)
    fast = root_plus(1.0, b, 0.0, d)
    oracle = np.array([_bisection_root(bi, di) for bi, di in zip(b, d)])
    return {"max_error": float(np.abs(fast - oracle).max())}


def scenario_metric_axioms() -> Dict[str, Any]:
    rng = np.random.default_rng(SEED)
    grids = Grids(SpatialGrid(1, 16), TimeGrid(9))
    uw2_config = SolverConfig(alpha=100.0, tau1=1e-3, tau2=1e-1, max_iterations=20_000,
                              tolerance=1e-5, report_every=500)
    uw1_config = SolverConfig(p=1, alpha=100.0, tau1=None, tau2=None, max_iterations=20_000,
                              tolerance=1e-8, report_every=500)

    def uw2(a, b):
        return solve_uw2(a, b, uw2_config, grids).uw2

    def uw1(a, b):
        return solve_uw1(a, b, uw1_config, grids.space).value

    out: Dict[str, Any] = {}
    for name, dist in (("uw1", uw1), ("uw2", uw2)):
        identity, symmetry, triangle = [], [], []
        for _ in range(10):
            a, b, c = (_random_profile(rng, 16) for _ in range(3))
            ab, ba = dist(a, b), dist(b, a)
            identity.append(dist(a, a))
            symmetry.append(abs(ab - ba) / (1.0 + ab))
            triangle.append(ab - dist(a, c) - dist(c, b))
        out[name] = {"identity": max(identity), "symmetry": max(symmetry), "triangle": max(triangle)}
    return out


def scenario_exp2() -> Dict[str, Any]:
    grids = Grids(SpatialGrid(1, 35), TimeGrid(15))
    space = grids.space
    mu1 = _gaussian(space, 2 / 3)
    balanced = _gaussian(space, 0.0, 1 / 3, weights=(0.5, 0.5))
    unbalanced = _gaussian(space, 0.0, 1 / 3)

    def value(mu0, alpha):
        return solve_uw2(mu0, mu1, SolverConfig(**{**TABLE, "alpha": alpha}), grids).objective

    return {
        "balanced": {a: value(balanced, a) for a in (1e-3, 1e-2, 1e2, 1e3)},
        "unbalanced": {a: value(unbalanced, a) for a in (1e-3, 1.0)},
    }


def scenario_exp3() -> Dict[str, Any]:
    grids = Grids(SpatialGrid(2, 35, 35), TimeGrid(15))
    mu0 = _gaussian(grids.space, (0.3, 0.3), (0.7, 0.3))
    mu1 = _gaussian(grids.space, (0.7, 0.7))
    result = solve_uw2(mu0, mu1, SolverConfig(**TABLE), grids)
    return {"f": result.state.f.tolist()}


SCENARIOS: Dict[str, Callable[[], Dict[str, Any]]] = {
    "exp1": scenario_exp1,
    "exp1_unbalanced": scenario_exp1_unbalanced,
    "uw1_oracle": scenario_uw1_oracle,
    "adjointness": scenario_adjointness,
    "cubic": scenario_cubic,
    "metric_axioms": scenario_metric_axioms,
    "exp2": scenario_exp2,
    "exp3": scenario_exp3,
}


# ── Check functions ───────────────────────────────────────────────────────

def check_objective_near_0055(r: dict) -> Tuple[bool, str]:
    return abs(r["objective"] - 0.055) <= 5e-3, f"objective={r['objective']:.5f}"


def check_classical_near_0056(r: dict) -> Tuple[bool, str]:
    value = r["classical"]
    ok = abs(value - 0.056) <= 5e-3 and abs(value - 0.5 / 9.0) <= 5e-3
    return ok, f"classical={value:.5f}"


def check_mass_identities(r: dict) -> Tuple[bool, str]:
    e1, e2 = r["diagnostics"]["mass_error_f"], r["diagnostics"]["mass_error_phi"]
    return abs(e1) <= 1e-3 and abs(e2) <= 5e-3, f"e_f={e1:.2e} e_phi={e2:.2e}"


def check_duality_gap(r: dict) -> Tuple[bool, str]:
    gap = r["diagnostics"]["gap"]
    return abs(gap) <= 1e-3 * (1.0 + r["primal"]), f"gap={gap:.3e}"


def check_gap_trend(r: dict) -> Tuple[bool, str]:
    tail = np.abs(np.asarray(r["gaps"][len(r["gaps"]) // 2:]))
    rises = [b - a for a, b in zip(tail, tail[1:]) if b > a * 1.01 + 1e-12]
    return not rises, f"{len(rises)} rise(s) above 1% in the last {tail.size} reports"


def check_hj_structure(r: dict) -> Tuple[bool, str]:
    d = r["diagnostics"]
    ok = d["hj_violation"] <= 5e-2 and d["hj_equality_error"] <= 5e-2
    return ok, f"violation={d['hj_violation']:.3e} equality={d['hj_equality_error']:.3e}"


def check_continuity(r: dict) -> Tuple[bool, str]:
    value = r["diagnostics"]["continuity_residual"]
    return value <= 1e-3, f"continuity={value:.3e}"


def check_pushforward(r: dict) -> Tuple[bool, str]:
    value = r["diagnostics"]["pushforward_residual"]
    return value <= 5e-2, f"push-forward={value:.3e}"


def check_uw1_matches_closed_form(r: dict) -> Tuple[bool, str]:
    worst = max(r["relative_errors"])
    return worst <= 1e-3, f"max relative error={worst:.2e}"


def check_adjoint_exact(r: dict) -> Tuple[bool, str]:
    return max(r["time"], r["space"]) <= 1e-12, f"time={r['time']:.1e} space={r['space']:.1e}"


def check_cubic_matches_bisection(r: dict) -> Tuple[bool, str]:
    return r["max_error"] <= 1e-10, f"max error={r['max_error']:.1e}"


def check_identity(r: dict) -> Tuple[bool, str]:
    worst = max(r[k]["identity"] for k in ("uw1", "uw2"))
    return worst <= 1e-3, f"max UW(μ,μ)={worst:.2e}"


def check_symmetry(r: dict) -> Tuple[bool, str]:
    worst = max(r[k]["symmetry"] for k in ("uw1", "uw2"))
    return worst <= 2e-3, f"max relative asymmetry={worst:.2e}"


def check_triangle(r: dict) -> Tuple[bool, str]:
    worst = max(r[k]["triangle"] for k in ("uw1", "uw2"))
    return worst <= 2e-3, f"max triangle excess={worst:.2e}"


def check_balanced_flat(r: dict) -> Tuple[bool, str]:
    v = r["balanced"]
    low = abs(v[1e-3] - v[1e-2]) / v[1e-2]
    high = abs(v[1e2] - v[1e3]) / v[1e3]
    return low <= 0.05 and high <= 0.05, f"Δ(1e-3,1e-2)={low:.1%} Δ(1e2,1e3)={high:.1%}"


def check_unbalanced_grows(r: dict) -> Tuple[bool, str]:
    v = r["unbalanced"]
    ratio = v[1e-3] / v[1.0]
    return ratio >= 2.0, f"J(1e-3)/J(1)={ratio:.2f}"


def check_source_sign_pattern(r: dict) -> Tuple[bool, str]:
    f = np.asarray(r["f"])
    positive = int(np.argmax(f <= 0)) if (f <= 0).any() else f.size
    ok = 0 < positive < f.size and bool((f[positive:] <= 1e-3).all())
    return ok, f"f>0 on the first {positive} of {f.size} slabs"


CHECK_FUNCTIONS: Dict[str, Callable[[dict], Tuple[bool, str]]] = {
    name[len("check_"):]: fn for name, fn in globals().items() if name.startswith("check_")
}


# ── Runner ────────────────────────────────────────────────────────────────

def run_eval(save_report: bool = False, quick: bool = False) -> dict:
    from rich import box
    from rich.console import Console
    from rich.table import Table

    console = Console()
    console.print("\n[bold cyan]══════════════════════════════════════[/bold cyan]")
    console.print("[bold cyan]       Acceptance Harness             [/bold cyan]")
    console.print("[bold cyan]══════════════════════════════════════[/bold cyan]\n")

    cache: Dict[str, Dict[str, Any]] = {}
    timings: Dict[str, float] = {}
    results: List[TestResult] = []
    by_category: Dict[str, List[TestResult]] = {}

    for tc in TEST_CASES:
        if quick and tc.long:
            console.print(f"[dim]Skipping (long): [{tc.id}] {tc.description}[/dim]")
            continue
        console.print(f"[bold]Running:[/bold] [{tc.id}] {tc.description}")

        if tc.scenario not in cache:
            t0 = time.time()
            with console.status(f"Solving scenario '{tc.scenario}'..."):
                cache[tc.scenario] = SCENARIOS[tc.scenario]()
            timings[tc.scenario] = time.time() - t0
        outcome = cache[tc.scenario]

        checks_passed, checks_failed, notes = [], [], []
        for check_name in tc.checks:
            fn = CHECK_FUNCTIONS.get(check_name)
            if fn is None:
                checks_failed.append(f"{check_name}(UNKNOWN)")
                continue
            ok, note = fn(outcome)
            (checks_passed if ok else checks_failed).append(check_name)
            notes.append(f"  {('✓' if ok else '✗')} {check_name}: {note}")

        total = len(checks_passed) + len(checks_failed)
        score = len(checks_passed) / total if total else 0.0
        result = TestResult(
            id=tc.id,
            category=tc.category,
            passed=score == 1.0,
            score=score,
            checks_passed=checks_passed,
            checks_failed=checks_failed,
            notes="\n".join(notes),
            seconds=round(timings[tc.scenario], 2),
        )
        results.append(result)
        by_category.setdefault(tc.category, []).append(result)

        status = "[green]PASS[/green]" if result.passed else "[red]FAIL[/red]"
        console.print(f"  {status} ({score:.0%}) | scenario {timings[tc.scenario]:.1f}s")
        for note in notes:
            color = "green" if "✓" in note else "red"
            console.print(f"  [{color}]{note}[/{color}]")
        console.print()

    # ── Summary table ─────────────────────────────────────────────────────
    table = Table(title="Acceptance Summary", box=box.ROUNDED, show_header=True)
    table.add_column("Category", style="cyan", width=14)
    table.add_column("Pass", style="green", width=6)
    table.add_column("Fail", style="red", width=6)
    table.add_column("Score", style="bold", width=8)

    total_pass = total_fail = 0
    category_scores = {}
    for cat, cat_results in by_category.items():
        passed_n = sum(1 for r in cat_results if r.passed)
        failed_n = len(cat_results) - passed_n
        cat_score = sum(r.score for r in cat_results) / len(cat_results)
        total_pass += passed_n
        total_fail += failed_n
        category_scores[cat] = cat_score
        table.add_row(cat, str(passed_n), str(failed_n), f"{cat_score:.0%}")

    overall = sum(r.score for r in results) / len(results) if results else 0
    table.add_row("─" * 12, "─" * 4, "─" * 4, "─" * 6)
    table.add_row("[bold]TOTAL[/bold]", f"[bold]{total_pass}[/bold]",
                  f"[bold]{total_fail}[/bold]", f"[bold]{overall:.0%}[/bold]")
    console.print(table)

    if total_fail == 0:
        console.print("\n[bold green]✓ All checks passed![/bold green]\n")
    else:
        console.print(f"\n[bold red]✗ {total_fail} case(s) failed[/bold red]\n")

    report = {
        "overall_score":   round(overall, 3),
        "total_tests":     len(results),
        "passed":          total_pass,
        "failed":          total_fail,
        "quick":           quick,
        "category_scores": {k: round(v, 3) for k, v in category_scores.items()},
        "results":         [asdict(r) for r in results],
    }

    if save_report:
        from uot.config import ARTIFACTS_DIR
        ARTIFACTS_DIR.mkdir(parents=True, exist_ok=True)
        report_path = ARTIFACTS_DIR / "eval_report.json"
        report_path.write_text(json.dumps(report, indent=2))
        console.print(f"[dim]Report saved: {report_path}[/dim]")

    return report


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Run acceptance harness")
    parser.add_argument("--report", action="store_true",
                        help="Save JSON report to artifacts/eval_report.json")
    parser.add_argument("--quick", action="store_true", help="Skip long scenarios")
    args = parser.parse_args()
    report = run_eval(save_report=args.report, quick=args.quick)
    sys.exit(0 if report["failed"] == 0 else 1)
