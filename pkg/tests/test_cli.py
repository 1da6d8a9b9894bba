import csv
import json

import numpy as np
import pytest

from lowthrust.cli import TRAJECTORY_HEADER, run, runner, sweep
from lowthrust.config import load_mission
from lowthrust.control import ControlLaw
from lowthrust.errors import MaxIterations, ValidationError
from lowthrust.main import main, parse_grid
from lowthrust.numerics import integrate
from lowthrust.numerics.roots import RootReport
from lowthrust.units import canonicalize

SOLVER = {"propagation_tol": 1e-11, "root_tol": 1e-8, "samples": 50}


@pytest.fixture
def coast_file(tmp_path, tempel1_config):
    data = {
        "name": "coast",
        "regime": "heliocentric",
        "x0": list(tempel1_config.x0),
        "x1": list(tempel1_config.x0),
        "tof_days": 60.0,
        "isp_s": 3000.0,
        "t_max_n": 0.6,
        "m0_kg": 1000.0,
        "solver": SOLVER,
    }
    path = tmp_path / "coast.json"
    path.write_text(json.dumps(data), encoding="utf-8")

    mission = canonicalize(load_mission(path)).scaled
    y0 = np.concatenate((mission.x0.as_array(), np.zeros(7)))
    y1 = integrate(y0, ControlLaw.energy(), 0.0, mission.tof, mission.prop, mission.pc, SOLVER["propagation_tol"])
    data["x1"] = [float(v) for v in y1[:6]]
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def _read_csv(path):
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.reader(handle))


def test_parse_grid():
    assert parse_grid("0.2, auto,0.6,") == [0.2, "auto", 0.6]
    assert parse_grid("AUTO") == ["auto"]
    with pytest.raises(ValidationError):
        parse_grid("0.2,abc")
    with pytest.raises(ValidationError):
        parse_grid(" , ")


def test_main_missing_file_is_config_error(tmp_path):
    assert main(["solve-eo", str(tmp_path / "absent.json")]) == 2


def test_main_invalid_mission_is_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        json.dumps({"x0": [1, 0, 0, 0, 0, 0], "x1": [1, 0, 0, 0, 0, 1], "tof_days": 10, "isp_s": -1, "t_max_n": 1, "m0_kg": 1}),
        encoding="utf-8",
    )
    assert main(["solve-fo", str(path)]) == 2


def test_main_rejects_non_positive_override(coast_file):
    assert main(["solve-eo", str(coast_file), "--tol", "0"]) == 2


def test_main_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["solve-xx", "tempel1"])


def test_run_rejects_unknown_command(tempel1_config):
    with pytest.raises(ValidationError):
        run("solve-xx", tempel1_config)


def test_solve_eo_writes_artifacts(coast_file, tmp_path):
    out = tmp_path / "eo"
    assert main(["solve-eo", str(coast_file), "--out", str(out)]) == 0

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["mission"] == "coast"
    assert summary["command"] == "solve-eo"
    assert summary["fuel_kg"] == pytest.approx(0.0, abs=1e-6)
    assert summary["tof_days"] == pytest.approx(60.0)
    assert len(summary["lam0"]) == 6

    rows = _read_csv(out / "trajectory.csv")
    assert tuple(rows[0]) == TRAJECTORY_HEADER
    assert len(rows) > 50
    assert float(rows[-1][0]) == pytest.approx(60.0)
    assert float(rows[1][7]) == pytest.approx(1000.0)

    steps = _read_csv(out / "continuation.csv")
    assert steps[0][:2] == ["stage", "value"]
    assert steps[1][0] == "eo"


def test_solve_fo_zero_effort(coast_file, tmp_path):
    artifacts = run("solve-fo", load_mission(coast_file), tmp_path / "fo")
    assert artifacts.summary["fuel_kg"] == 0.0
    assert artifacts.summary["dv_m_s"] == 0.0
    assert artifacts.summary["gamma_tr"] == 1.0
    assert artifacts.summary["beta_t"] is None
    assert set(artifacts.paths) == {"summary", "trajectory", "continuation"}
    throttle = [float(row[8]) for row in _read_csv(artifacts.paths["trajectory"])[1:]]
    assert max(throttle) == 0.0


class _FakeEo:
    lam0 = np.zeros(6)


def _report(residual=1.0, iterations=3):
    return RootReport(np.zeros(6), 1e-12, iterations, iterations, True, residual, [residual])


@pytest.fixture
def patched_gamma_sweep(monkeypatch):
    def fake_shoot(mission, law, pc, guess, settings):
        if law.gamma_tr > 0.8:
            raise MaxIterations("stalled", RootReport(np.zeros(6), 1.0, 200, 200, False, 5.0, [5.0]))
        return _report(residual=law.gamma_tr, iterations=int(10 * law.gamma_tr)), 0.0

    monkeypatch.setattr(runner, "solve_eo", lambda mission, settings=None: _FakeEo())
    monkeypatch.setattr(runner, "compute_gamma_tr", lambda eo, prop, tol: 0.5)
    monkeypatch.setattr(runner, "shoot_fixed_time", fake_shoot)


def test_gamma_sweep_marks_auto_and_records_failures(patched_gamma_sweep, tempel1_config, tmp_path):
    table = sweep("gamma_tr", tempel1_config, [0.2, "auto", 0.9], out_dir=tmp_path, workers=2)
    assert table.auto_value == 0.5
    assert [row.value for row in table.rows] == [0.2, 0.5, 0.9]
    assert [row.is_auto for row in table.rows] == [False, True, False]
    assert table.rows[0].initial_residual == pytest.approx(0.2)
    assert table.rows[1].iterations == 5
    failed = table.rows[2]
    assert not failed.converged
    assert failed.iterations == 200
    assert failed.initial_residual == 5.0
    assert "stalled" in failed.error

    rows = _read_csv(table.path)
    assert table.path.name == "sweep_gamma_tr.csv"
    assert rows[0] == ["value", "is_auto", "initial_residual", "iterations", "converged", "error"]
    assert len(rows) == 4


def test_gamma_sweep_single_point(patched_gamma_sweep, tempel1_config):
    table = sweep("gamma_tr", tempel1_config, [0.5])
    assert len(table.rows) == 1
    assert table.rows[0].is_auto
    assert table.path is None


def test_beta_sweep(monkeypatch, tempel1_config):
    monkeypatch.setattr(runner, "guess_tof_with_eo", lambda mission, upper, tol, settings: (1.0, _FakeEo()))
    monkeypatch.setattr(runner, "beta_for_costates", lambda mission, lam0, tof, pc, settings: 2.0)
    monkeypatch.setattr(
        runner, "shoot_free_time", lambda mission, beta, pc, lam0, tof, settings: _report(residual=beta)
    )
    table = sweep("beta_t", tempel1_config, [1.0, "auto", 3.0])
    assert table.auto_value == 2.0
    assert [row.initial_residual for row in table.rows] == [1.0, 2.0, 3.0]
    assert all(row.converged for row in table.rows)


def test_sweep_rejects_unknown_parameter(tempel1_config):
    with pytest.raises(ValidationError):
        sweep("k", tempel1_config, [0.1])


def test_summary_consistent_and_deterministic(coast_file, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    config = load_mission(coast_file)
    first = run("solve-eo", config)
    second = run("solve-eo", config)
    assert first.paths["summary"] == runner.default_out_dir("coast", "solve-eo") / "summary.json"
    assert (tmp_path / "out" / "coast-solve-eo" / "summary.json").exists()
    mission = first.mission
    dv = float(first.trajectory.dv[-1])
    assert first.summary["fuel_kg"] == pytest.approx(mission.fuel_kg(dv), rel=1e-9, abs=1e-15)
    assert first.summary["dv_m_s"] == pytest.approx(mission.units.velocity_to_si(dv))
    assert first.summary["lam0"] == second.summary["lam0"]
    assert first.trajectory_rows() == second.trajectory_rows()


def test_main_without_out_writes_default_directory(coast_file, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["solve-eo", str(coast_file)]) == 0
    out = tmp_path / "out" / "coast-solve-eo"
    assert {path.name for path in out.iterdir()} == {"summary.json", "trajectory.csv", "continuation.csv"}
