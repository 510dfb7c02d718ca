import json

import pandas as pd
import pytest

from uot.errors import ConfigError, DensityFileError
from uot.experiments import (
    PRESETS,
    diagnose_run,
    load_run_config,
    parse_run_config,
    preset_config,
    run,
    sweep_dirname,
)
from uot.outputs import read_matrix, read_summary


def _document(**overrides):
    document = {
        "p": 2, "alpha": 10.0, "dims": 1, "n_t": 5, "n_x": 10,
        "mu0": {"kind": "gaussian", "means": [0.3], "variances": [0.02]},
        "mu1": {"kind": "gaussian", "means": [0.7], "variances": [0.02], "scale": 2.0},
        "tau1": 1e-3, "tau2": 1e-1, "iterations": 40, "report_every": 20,
    }
    document.update(overrides)
    return {k: v for k, v in document.items() if v is not None}


# ── Parsing ───────────────────────────────────────────────────────────────

def test_missing_key_is_named():
    with pytest.raises(ConfigError) as info:
        parse_run_config(_document(tau1=None))
    assert info.value.key == "tau1"
    assert "tau1" in str(info.value)


def test_n_y_required_only_in_2d():
    parse_run_config(_document())
    document = _document(dims=2, mu0={"kind": "uniform"}, mu1={"kind": "uniform", "scale": 2.0})
    with pytest.raises(ConfigError) as info:
        parse_run_config(document)
    assert info.value.key == "n_y"


def test_p1_needs_no_steps_or_time_grid():
    config = parse_run_config(_document(p=1, tau1=None, tau2=None, n_t=None))
    assert config.tau1 is None and config.tau2 is None
    assert config.solver_config().p == 1


def test_preset_fills_unset_keys(tmp_path):
    config = preset_config("exp1", n_x=12, output_dir=str(tmp_path))
    assert config.n_x == 12
    assert config.n_t == 15
    assert config.alpha == 100.0
    assert config.tau1 == 1e-3 and config.tau2 == 1e-1
    assert config.iterations == 200_000
    assert config.baseline


def test_presets_share_the_grid_and_budget():
    assert set(PRESETS) == {"exp1", "exp2-balanced", "exp2-unbalanced", "exp3", "exp4", "exp5"}
    for name, values in PRESETS.items():
        if values["p"] == 2:
            assert (values["n_t"], values["n_x"], values["iterations"]) == (15, 35, 200_000), name
    assert PRESETS["exp3"]["dims"] == 2 and PRESETS["exp3"]["n_y"] == 35
    assert PRESETS["exp2-balanced"]["alpha_sweep"][0] == 1e-3


def test_gaussian_presets_use_width_one_tenth():
    for name in ("exp1", "exp2-balanced", "exp2-unbalanced", "exp3"):
        for key in ("mu0", "mu1"):
            assert all(v == [0.01] for v in PRESETS[name][key]["variances"]), (name, key)
    config = preset_config("exp1")
    assert config.mu0.variances == [(0.01,)]
    assert config.mu1.means == [(2 / 3,)]


def test_image_presets_resolve_shipped_files():
    config = preset_config("exp4")
    assert config.mu0.path.is_file()
    assert config.mu1.scale == 1.5


@pytest.mark.parametrize(
    "overrides, key",
    [
        ({"preset": "exp9"}, "preset"),
        ({"colour": "red"}, "colour"),
        ({"alpha": -1.0}, "alpha"),
        ({"mu0": {"kind": "gaussian", "means": [2.0], "variances": [0.1]}}, "means"),
        ({"mu0": {"kind": "gaussian", "mean": [0.5]}}, "mu0"),
        ({"n_x": 10.5}, "n_x"),
    ],
)
def test_invalid_documents(overrides, key):
    with pytest.raises(ConfigError) as info:
        parse_run_config(_document(**overrides))
    assert info.value.key == key


def test_missing_density_file(tmp_path):
    document = _document(mu0={"kind": "csv", "path": "nope.csv"})
    with pytest.raises(DensityFileError):
        parse_run_config(document, base_dir=tmp_path)


def test_load_resolves_paths_against_the_config_folder(tmp_path):
    (tmp_path / "left.csv").write_text("1,1,0,0\n")
    path = tmp_path / "run.json"
    path.write_text(json.dumps(_document(mu0={"kind": "csv", "path": "left.csv"})))
    config = load_run_config(path)
    assert config.mu0.path == tmp_path / "left.csv"

    path.write_text("{ not json")
    with pytest.raises(ConfigError):
        load_run_config(path)


# ── Running ───────────────────────────────────────────────────────────────

def test_uw2_run_and_diagnose_agree(tmp_path):
    config = parse_run_config(_document(output_dir=str(tmp_path), baseline=True))
    summary = run(config)

    assert summary["converged"] is False
    assert summary["iterations_run"] == 40
    assert summary["classical_objective"] > 0
    assert summary["uw2"] == pytest.approx((2 * summary["objective"]) ** 0.5)
    assert (tmp_path / "map.csv").exists()
    assert read_summary(tmp_path)["objective"] == summary["objective"]

    again = diagnose_run(tmp_path)
    for key in ("objective", "uw2", "dual", "endpoint_dual", "gap", "continuity_residual", "hj_violation"):
        assert again[key] == pytest.approx(summary[key], rel=1e-12, abs=1e-12), key


def test_uw1_run_writes_a_constant_source(tmp_path):
    config = preset_config("exp5", n_x=16, iterations=300, report_every=100, output_dir=str(tmp_path))
    summary = run(config)
    source = read_matrix(tmp_path / "f.csv")
    assert source.shape == (1, 1)
    assert source[0, 0] == pytest.approx(summary["source_integral"])
    assert diagnose_run(tmp_path)["uw1"] == pytest.approx(summary["uw1"], rel=1e-12)


def test_alpha_sweep_writes_one_directory_per_alpha(tmp_path):
    config = parse_run_config(_document(output_dir=str(tmp_path), alpha_sweep=[10.0, 1.0], workers=2))
    result = run(config)
    assert [row["alpha"] for row in result["sweep"]] == [1.0, 10.0]
    for alpha in (1.0, 10.0):
        assert (tmp_path / sweep_dirname(alpha) / "summary.json").exists()
        echo = json.loads((tmp_path / sweep_dirname(alpha) / "config.json").read_text())
        assert echo["alpha"] == alpha and echo["alpha_sweep"] == []
    table = pd.read_csv(result["sweep_csv"])
    assert list(table["alpha"]) == [1.0, 10.0]
    assert list(table.columns) == ["alpha", "objective", "uw2", "dual", "gap", "source_integral"]


def test_diagnose_needs_a_run_directory(tmp_path):
    with pytest.raises(ConfigError):
        diagnose_run(tmp_path)
