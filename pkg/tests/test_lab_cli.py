import csv
import json

import pytest

from tangencylab.errors import ValidationError
from tangencylab.lab_cli import (
    DEPENDS, EXIT_VALIDATION, MINIMAL_STAGES, PLOT_KINDS, STAGES, RunConfig, emit_plot_data, load_config, main,
    run_pipeline,
)


@pytest.fixture(scope="module")
def minimal_runs(tmp_path_factory):
    runs = []
    for i in range(2):
        out = tmp_path_factory.mktemp(f"run{i}")
        runs.append((out, run_pipeline(RunConfig.from_dict({}, out=str(out)))))
    return runs


def test_dependencies_form_a_dag():
    assert set(DEPENDS) == set(STAGES)
    for s, deps in DEPENDS.items():
        assert all(STAGES.index(d) < STAGES.index(s) for d in deps)


def test_config_roundtrip_and_digest(tmp_path):
    cfg = RunConfig.from_dict({"seed": 5, "tangency": {"n": 14}})
    assert cfg.grids["tangency"] == {"n": 14, "start": -0.1, "kappa": 2}
    again = RunConfig.from_dict(cfg.to_dict())
    assert again.canonical_json() == cfg.canonical_json() and again.digest() == cfg.digest()
    assert RunConfig.from_dict({"seed": 6}).digest() != cfg.digest()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(str(path)).digest() == cfg.digest()


def test_config_rejects_unknowns():
    with pytest.raises(ValidationError):
        RunConfig.from_dict({"colour": "red"})
    with pytest.raises(ValidationError):
        RunConfig.from_dict({"stages": ["bogus"]})
    assert RunConfig.from_dict({"stages": "all"}).stages == STAGES


def test_eigenvalue_condition_reported():
    cfg = RunConfig.from_dict({"model": {"backend": "ideal", "lambda0": 0.1}})
    with pytest.raises(ValidationError, match=r"\(F3\)"):
        cfg.validate()


def test_cli_validation_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"model": {"backend": "ideal", "lambda0": 0.1}}))
    assert main(["--config", str(path), "--out", str(tmp_path / "o"), "theta-select"]) == EXIT_VALIDATION
    assert "(F3)" in capsys.readouterr().err


def test_minimal_pipeline_artifacts(minimal_runs):
    out, manifest = minimal_runs[0]
    assert manifest.exit_code == 0
    assert list(manifest.tasks) == ["config"] + MINIMAL_STAGES
    for name in ("theta.json", "return_curves.csv", "tangency.json", "b_curve.json", "sinks.json",
                 "manifest.json", "config.json"):
        assert (out / name).exists()
    assert json.loads((out / "tangency.json").read_text())["n0"] == 12


def test_manifest_deterministic(minimal_runs):
    (o1, m1), (o2, m2) = minimal_runs
    assert m1.canonical() == m2.canonical()
    d1 = json.loads((o1 / "manifest.json").read_text())
    d1.pop("wall_clock")
    assert d1 == json.loads(json.dumps(m2.canonical(), sort_keys=True))
    for name in ("theta.json", "tangency.json", "sinks.json", "return_curves.csv"):
        assert (o1 / name).read_text() == (o2 / name).read_text()


def test_measure_stage_and_convergence_plot(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "measure-converge", "--levels", "3", "--trials", "50"]) == 0
    art = tmp_path / "measure_convergence.json"
    assert main(["plot-data", str(art), "convergence"]) == 0
    dest = capsys.readouterr().out.strip().splitlines()[-1]
    with open(dest) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["level", "worst_factor", "max_distance"] and len(rows) == 5


def test_strip_plot_rows(tmp_path):
    src = tmp_path / "strips.json"
    src.write_text(json.dumps({"strips": [[0.0, -1e-3, 1e-3, 0.0, "B_12"], [0.1, -2e-3, 2e-3, 0.0, "B_12"]]}))
    dest = emit_plot_data(src, "strip")
    with open(dest) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "lower", "upper", "label"] and rows[2][3] == "B_12"


def test_plot_kind_validated(tmp_path):
    assert "strip" in PLOT_KINDS
    with pytest.raises(ValidationError):
        emit_plot_data(tmp_path / "x.json", "histogram")
    with pytest.raises(ValidationError):
        emit_plot_data(tmp_path / "missing.json", "strip")
