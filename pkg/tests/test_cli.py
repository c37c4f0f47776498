import csv
import json

import numpy as np
import pytest

from sublinear_minkowski import SurfaceMeasure, config
from sublinear_minkowski.cli import Scenario, main, run_scenario


def report(out):
    return json.loads((out / "report.json").read_text())


def test_pde_disk_report_and_field_csv(tmp_path, capsys):
    assert main(["pde", "--body", "disk", "--beta", "0.5", "--out", str(tmp_path)]) == 0
    rep = report(tmp_path)
    assert rep["passed"]
    assert rep["results"]["identity_gap"] <= 0.01
    names = [c["name"] for c in rep["checks"]]
    assert names == sorted(names)
    with open(tmp_path / "field.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "phi"]
    assert len(rows) - 1 == rep["results"]["nodes"]
    assert json.loads(capsys.readouterr().out)["passed"]


def test_measure_square(tmp_path):
    assert main(["measure", "--body", "square", "--out", str(tmp_path)]) == 0
    rep = report(tmp_path)
    assert rep["results"]["nonzero_bins"] == 4
    assert np.linalg.norm(rep["results"]["centroid"]) <= 1e-2
    mu = SurfaceMeasure.load(tmp_path / "measure.json")
    assert mu.M == 256


def test_malformed_polygon_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"vertices": [[0, 0], [1, 0]')
    assert main(["pde", "--in", str(bad), "--out", str(tmp_path)]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_nonconvex_polygon_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"vertices": [[0, 0], [2, 0], [1, 0.2], [2, 2], [0, 2]]}))
    assert main(["functional", "--in", str(bad), "--out", str(tmp_path)]) == 2
    assert "invalid input" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert main(["pde", "--in", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_invalid_beta_exit_2(tmp_path):
    assert main(["pde", "--beta", "1.5", "--out", str(tmp_path)]) == 2


def test_nonconvergence_exit_3(tmp_path):
    assert main(["pde", "--body", "square", "--max-iter", "1", "--mesh-h", "0.1", "--out", str(tmp_path)]) == 3


def test_failed_check_exit_1(tmp_path):
    # a huge step ruins the finite difference, so the variation check fails
    code = main(["variation", "--body", "square", "--other", "disk", "--t-step", "0.5",
                 "--mesh-h", "0.05", "--out", str(tmp_path)])
    assert code == 1
    assert not report(tmp_path)["passed"]


def test_support_file_input(tmp_path):
    sup = tmp_path / "h.json"
    sup.write_text(json.dumps({"directions": 4, "values": [1, 1, 1, 1]}))
    assert main(["functional", "--in", str(sup), "--mesh-h", "0.05", "--out", str(tmp_path)]) == 0
    assert report(tmp_path)["results"]["alpha"] == 8.0


def test_iso_random(tmp_path):
    assert main(["iso", "--body", "random", "--seed", "4", "--out", str(tmp_path)]) == 0
    assert report(tmp_path)["results"]["ratio"] <= 1.0


def test_minkowski_round_trip(tmp_path):
    tgt = tmp_path / "t"
    assert main(["measure", "--body", "square", "--out", str(tgt)]) == 0
    out = tmp_path / "s"
    assert main(["minkowski", "--in", str(tgt / "measure.json"), "--initial", "random", "--out", str(out)]) == 0
    sol = json.loads((out / "solution.json").read_text())
    assert set(sol) == {"vertices", "lambda", "rescale_t", "residual", "iterations"}
    assert sol["residual"] <= 0.05
    assert (out / "trace.csv").read_text().startswith("iteration,F,width")


def test_minkowski_rejects_unbalanced_target(tmp_path):
    w = np.zeros(256)
    w[0] = 1.0
    SurfaceMeasure(w).save(tmp_path / "m.json")
    assert main(["minkowski", "--in", str(tmp_path / "m.json"), "--out", str(tmp_path)]) == 2


def test_minkowski_needs_input(tmp_path):
    assert main(["minkowski", "--out", str(tmp_path)]) == 2


def test_verify_scaling(tmp_path):
    assert main(["verify", "scaling", "--out", str(tmp_path)]) == 0
    checks = {c["name"]: c for c in report(tmp_path)["checks"]}
    assert checks["scaling.square.F_ratio"]["value"] == pytest.approx(256, rel=0.02)
    assert checks["scaling.square.mass_ratio"]["value"] == pytest.approx(128, rel=0.02)


def test_verify_unknown_suite(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "nonsense", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_reports_reproducible(tmp_path):
    s = Scenario(name="m", operation="measure", body="random", seed=7, mesh_h=0.05, out=str(tmp_path / "a"))
    r1 = run_scenario(s).to_dict()
    s.out = str(tmp_path / "b")
    r2 = run_scenario(s).to_dict()
    assert r1["results"] == r2["results"]
    assert (tmp_path / "a" / "measure.json").read_bytes() == (tmp_path / "b" / "measure.json").read_bytes()


def test_report_lists_pinned_constants(tmp_path):
    assert main(["functional", "--mesh-h", "0.05", "--out", str(tmp_path)]) == 0
    const = report(tmp_path)["constants"]
    assert const["pinned"]["0.5"]["F_ball"] == config.pinned(0.5)["F_ball"]
    assert "defaults_version" in const


def test_scenario_config_file(tmp_path):
    cfg = tmp_path / "scenario.json"
    cfg.write_text(json.dumps({"name": "from-file", "body": "square"}))
    assert main(["functional", "--config", str(cfg), "--mesh-h", "0.05", "--out", str(tmp_path)]) == 0
    assert report(tmp_path)["scenario"]["name"] == "from-file"


def test_pin_constants(tmp_path, monkeypatch):
    assert main(["pin-constants", "--betas", "0.5", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "defaults.json").read_text())
    assert doc["pinned"]["0.5"]["F_ball"] == pytest.approx(config.pinned(0.5)["F_ball"], rel=1e-8)
    monkeypatch.setenv(config.ENV_VAR, str(tmp_path / "defaults.json"))
    assert config.load_defaults()["version"] == doc["version"]
