import json
import math
import sys
from pathlib import Path

REQUIRED_TOP_LEVEL = ["uw2", "outputs", "uw1", "densities", "errors"]
UW2_KEYS = ["objective", "uw2", "dual", "gap", "continuity_residual", "mass_error_f", "converged", "iterations_run"]


def fail(msg: str):
    print(f"VERIFY_FAIL: {msg}")
    sys.exit(1)


def is_finite_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def main():
    if len(sys.argv) != 2:
        fail("Usage: verify_output.py <artifacts/sanity_output.json>")

    path = Path(sys.argv[1])
    if not path.exists():
        fail(f"File not found: {path}")

    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except Exception as e:
        fail(f"Invalid JSON: {e}")

    for k in REQUIRED_TOP_LEVEL:
        if k not in data:
            fail(f"Missing top-level key: {k}")

    uw2 = data["uw2"]
    for k in UW2_KEYS:
        if k not in uw2:
            fail(f"uw2.{k} missing")
    for k in ("objective", "uw2", "dual", "gap", "continuity_residual"):
        if not is_finite_number(uw2[k]):
            fail(f"uw2.{k} must be a finite number")
    if uw2["objective"] < 0:
        fail("uw2.objective must be >= 0")
    if abs(uw2["uw2"] - math.sqrt(2.0 * uw2["objective"])) > 1e-12:
        fail("uw2.uw2 must equal sqrt(2 * objective)")

    outputs = data["outputs"]
    if outputs.get("missing"):
        fail(f"run directory missing files: {outputs['missing']}")

    uw1 = data["uw1"]
    for k in ("value", "closed_form", "relative_error"):
        if not is_finite_number(uw1.get(k)):
            fail(f"uw1.{k} must be a finite number")

    densities = data["densities"]
    if not isinstance(densities, dict) or not densities:
        fail("densities must be a non-empty object")

    if not isinstance(data["errors"], list):
        fail("errors must be a list")
    if data["errors"]:
        fail(f"sanity run reported problems: {data['errors']}")

    print("VERIFY_OK")


if __name__ == "__main__":
    main()
