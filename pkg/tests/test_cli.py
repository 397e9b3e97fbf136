import csv
import json
import math

import numpy as np
import pytest

from relkepler import ConfigError, RegionError
from relkepler.cli import main
from relkepler.config import parse_config, set_path
from relkepler.io import read_trajectory_csv, trajectory_columns

CIRCULAR = {
    "schema": 1,
    "params": {"m": 1, "c": 1, "G": 1, "M": 1},
    "model": {"kind": "classical-kepler"},
    "initial": {"x": [1, 0], "v": [0, 1]},
    "t_span": [0, 4 * math.pi],
    "output": {"plots": ["theta-r", "t-energy_drift"]},
}
SR_ORBIT = {
    "schema": 1,
    "model": {"kind": "relativistic-kepler", "h": -0.3},
    "initial": {"apsis": {"h": -0.3, "L": 1.2, "which": "pericenter"}},
    "orbits": 2,
    "integrator": {"rtol": 1e-11, "atol": 1e-13},
}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(tmp_path, *args, cfg=None, out="out"):
    argv = list(args)
    if cfg is not None:
        argv += ["--config", write(tmp_path, cfg)]
    argv += ["--out", str(tmp_path / out)]
    return main(argv)


def last_error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


class TestSimulate:
    def test_circular(self, tmp_path):
        assert run(tmp_path, "simulate", cfg=CIRCULAR) == 0
        out = tmp_path / "out"
        with open(out / "trajectory.csv") as fh:
            header = next(csv.reader(fh))
        assert header == trajectory_columns(2)
        rows = read_trajectory_csv(out / "trajectory.csv")
        t = np.array([r["t"] for r in rows])
        assert np.all(np.diff(t) > 0)
        assert all(r["gamma"] is None and r["s_clock"] is None and r["region"] == "" for r in rows)
        assert all(math.isfinite(r["energy"]) and math.isfinite(r["angular_momentum"]) for r in rows)
        report = json.loads((out / "report.json").read_text())
        assert report["status"] == "ok" and report["energy_drift_rel"] < 1e-8
        theta_r = np.loadtxt(out / "theta_r.txt")
        assert np.allclose(theta_r[:, 1], 1.0, atol=1e-8)
        assert (out / "t_energy_drift.txt").exists()

    def test_relativistic_columns(self, tmp_path):
        assert run(tmp_path, "simulate", cfg=SR_ORBIT) == 0
        rows = read_trajectory_csv(tmp_path / "out" / "trajectory.csv")
        assert all(r["region"] == "OmegaH" and r["gamma"] >= 1 for r in rows)
        speeds = [math.hypot(r["v0"], r["v1"]) for r in rows]
        assert max(speeds) < 1

    def test_negative_mass(self, tmp_path, capsys):
        bad = set_path(CIRCULAR, "params.m", -1)
        assert run(tmp_path, "simulate", cfg=bad) == 2
        err = last_error(capsys)
        assert err["category"] == "config" and err["field"] == "params.m"

    def test_infall(self, tmp_path, capsys):
        cfg = dict(CIRCULAR, initial={"x": [1, 0], "v": [0, 0]}, t_span=[0, 5],
                   integrator={"r_min": 1e-6})
        code = run(tmp_path, "simulate", cfg=cfg)
        assert code in (3, 4)
        err = last_error(capsys)
        assert err["error"] == "DomainExit" and len(err["last_state"]) == 4
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["status"] == "DomainExit" and report["last_state"] == err["last_state"]
        assert (tmp_path / "out" / "trajectory.csv").exists()

    def test_deterministic(self, tmp_path):
        run(tmp_path, "simulate", cfg=SR_ORBIT, out="a")
        run(tmp_path, "simulate", cfg=SR_ORBIT, out="b")
        for name in ("trajectory.csv", "report.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_missing_config(self, tmp_path, capsys):
        assert main(["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
        assert last_error(capsys)["field"] == "--config"

    def test_bad_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 2

    def test_cli_tolerance_override(self, tmp_path):
        assert run(tmp_path, "simulate", "--rtol", "1e-6", cfg=CIRCULAR) == 0
        loose = json.loads((tmp_path / "out" / "report.json").read_text())
        assert loose["n_samples"] < 200

    def test_usage_error(self):
        assert main(["simulate"]) == 2
        assert main(["launch", "--config", "x"]) == 2


class TestBridge:
    def test_forward(self, tmp_path, capsys):
        assert run(tmp_path, "bridge", cfg=SR_ORBIT) == 0
        report = json.loads((tmp_path / "out" / "bridge_report.json").read_text())
        assert report["verdict"] == "pass" and report["direction"] == "forward"
        for key in ("sup_position_gap", "energy_gap", "residual_norm", "clock_roundtrip_gap"):
            assert report[key] >= 0

    def test_backward(self, tmp_path):
        assert run(tmp_path, "bridge", "--direction", "backward", cfg=SR_ORBIT) == 0
        assert json.loads((tmp_path / "out" / "bridge_report.json").read_text())["direction"] == "backward"

    def test_energy_taken_from_state(self, tmp_path):
        cfg = dict(SR_ORBIT, model={"kind": "relativistic-kepler"})
        assert run(tmp_path, "bridge", cfg=cfg) == 0
        assert json.loads((tmp_path / "out" / "bridge_report.json").read_text())["target_energy"] == pytest.approx(-0.3)

    def test_asserted_energy_checked(self, tmp_path, capsys):
        cfg = set_path(SR_ORBIT, "model.h", -0.2)
        assert run(tmp_path, "bridge", cfg=cfg) == 4
        assert last_error(capsys)["error"] == "EnergyMismatch"

    def test_sigma_needs_sigma_state(self, tmp_path, capsys):
        assert run(tmp_path, "bridge", "--sigma-branch", cfg=SR_ORBIT) == 4
        assert last_error(capsys)["error"] == "RegionError"

    def test_sigma_branch(self, tmp_path):
        cfg = {"schema": 1, "model": {"kind": "relativistic-kepler", "h": -3},
               "initial": {"x": [2, 0], "p": [0, 0], "z": [2, 0], "zp": [0, math.sqrt(1.25)]},
               "s_span": [0, 5]}
        assert run(tmp_path, "bridge", "--sigma-branch", cfg=cfg) == 0
        report = json.loads((tmp_path / "out" / "bridge_report.json").read_text())
        assert report["target_energy"] == -1 and report["energy_gap"] < 1e-6

    def test_strict_failed_verdict(self, tmp_path):
        cfg = dict(SR_ORBIT, tolerances={"energy_gap": 1e-30})
        assert run(tmp_path, "bridge", cfg=cfg) == 0
        assert run(tmp_path, "bridge", "--strict", cfg=cfg) == 1

    def test_needs_relativistic_model(self, tmp_path, capsys):
        assert run(tmp_path, "bridge", cfg=CIRCULAR) == 2


class TestPrecession:
    def test_families(self, tmp_path):
        points = [{"family": f, "h": 0, "L": 1, "c": 1000}
                  for f in ("kepler", "special-relativity", "levi-civita", "schwarzschild")]
        cfg = {"schema": 1, "integrator": {"rtol": 1e-12, "atol": 1e-14},
               "precession": {"orbits": 10, "points": points}}
        assert run(tmp_path, "precession", cfg=cfg) == 0
        with open(tmp_path / "out" / "precession.csv") as fh:
            rows = {r["family"]: r for r in csv.DictReader(fh)}
        assert list(next(iter(rows.values())).keys()) == ["family", "h", "L", "c", "measured", "analytic",
                                                          "ratio", "status"]
        assert all(r["status"] == "ok" for r in rows.values())
        assert abs(float(rows["kepler"]["measured"])) < 1e-6
        assert float(rows["levi-civita"]["ratio"]) == pytest.approx(6.0, rel=0.02)
        schw = rows["schwarzschild"]
        assert float(schw["measured"]) == pytest.approx(6 * math.pi * 1e-6, rel=0.01)
        assert float(schw["analytic"]) == pytest.approx(6 * math.pi * 1e-6)

    def test_insufficient_events_flagged(self, tmp_path):
        cfg = {"schema": 1, "integrator": {"max_steps": 50},
               "precession": {"orbits": 10, "points": [{"family": "kepler", "L": 1},
                                                       {"family": "special-relativity", "L": 1, "c": 30}]}}
        assert run(tmp_path, "precession", cfg=cfg) == 0
        with open(tmp_path / "out" / "precession.csv") as fh:
            statuses = [r["status"] for r in csv.DictReader(fh)]
        assert statuses == ["MaxStepsExceeded", "MaxStepsExceeded"]

    def test_missing_points(self, tmp_path):
        assert run(tmp_path, "precession", cfg={"schema": 1}) == 2


SWEEP = dict(SR_ORBIT, orbits=1, model={"kind": "relativistic-kepler"},
             sweep={"grid": {"initial.apsis.h": [-0.4, -0.3, -0.2], "initial.apsis.L": [1.1, 1.2, 1.25]}})


class TestSweep:
    def test_grid(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RELKEPLER_THREADS", "3")
        assert run(tmp_path, "sweep", cfg=SWEEP) == 0
        out = tmp_path / "out"
        dirs = sorted(p.name for p in out.iterdir() if p.is_dir())
        assert dirs == [f"run_{i:04d}" for i in range(9)]
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_runs"] == 9 and summary["n_ok"] == 9
        assert summary["runs"][0]["point"] == {"initial.apsis.L": 1.1, "initial.apsis.h": -0.4}

    def test_failed_run_is_isolated(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RELKEPLER_THREADS", "2")
        cfg = {"schema": 1, "model": {"kind": "relativistic-kepler", "h": -0.25},
               "initial": {"x": [2, 0], "direction": [0, 1]}, "t_span": [0, 1],
               "sweep": {"grid": {"initial.x": [[2, 0], [8, 0], [3, 0]]}}}
        assert run(tmp_path, "sweep", cfg=cfg) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        status = [r["status"] for r in summary["runs"]]
        assert status == ["ok", "failed", "ok"]
        assert summary["runs"][1]["error"]["error"] == "RegionError"
        assert run(tmp_path, "sweep", "--strict", cfg=cfg, out="strict") == 4

    def test_all_failed(self, tmp_path):
        cfg = {"schema": 1, "model": {"kind": "relativistic-kepler", "h": -0.25},
               "initial": {"x": [8, 0], "direction": [0, 1]}, "t_span": [0, 1],
               "sweep": {"grid": {"initial.x": [[8, 0], [9, 0]]}}}
        assert run(tmp_path, "sweep", cfg=cfg) == 3

    def test_concurrency_does_not_change_outputs(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RELKEPLER_THREADS", "1")
        run(tmp_path, "sweep", cfg=SWEEP, out="serial")
        monkeypatch.setenv("RELKEPLER_THREADS", "4")
        run(tmp_path, "sweep", cfg=SWEEP, out="parallel")
        for i in range(9):
            name = f"run_{i:04d}/trajectory.csv"
            assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()
        assert (tmp_path / "serial" / "summary.json").read_bytes() == (tmp_path / "parallel" / "summary.json").read_bytes()

    def test_bad_grid(self, tmp_path):
        assert run(tmp_path, "sweep", cfg=dict(SR_ORBIT, sweep={"grid": {"orbits": []}})) == 2
        assert run(tmp_path, "sweep", cfg=SR_ORBIT) == 2


class TestConfig:
    def test_schema_version(self):
        with pytest.raises(ConfigError) as info:
            parse_config(dict(CIRCULAR, schema=2))
        assert info.value.field == "schema"

    @pytest.mark.parametrize("path,value,field", [
        ("model.kind", "newton", "model.kind"),
        ("model.family", "newton", "model.family"),
        ("dimension", 4, "dimension"),
        ("t_span", [1, 0], "t_span"),
        ("orbits", 0, "orbits"),
        ("integrator.rtol", 1.0, "integrator"),
        ("params.c", "fast", "params.c"),
    ])
    def test_invalid_fields(self, path, value, field):
        with pytest.raises(ConfigError) as info:
            parse_config(set_path(CIRCULAR, path, value))
        assert info.value.field == field

    def test_family_sets_coefficients(self):
        cfg = parse_config(set_path(CIRCULAR, "model", {"family": "levi-civita", "h": 0.1}))
        assert (cfg.kind, cfg.ell, cfg.bhat) == ("central-force", 4, 6.0)
        assert cfg.ahat == pytest.approx(1.4)

    def test_superluminal_velocity(self):
        cfg = parse_config(dict(SR_ORBIT, initial={"x": [1, 0], "v": [0, 1.2]}))
        with pytest.raises(ConfigError):
            cfg.initial_state()

    def test_direction_uses_energy(self):
        cfg = parse_config({"schema": 1, "model": {"kind": "relativistic-kepler", "h": -0.25},
                            "initial": {"x": [2, 0], "direction": [0, 3]}, "t_span": [0, 1]})
        y0 = cfg.initial_state()
        assert cfg.build_field().energy(y0) == pytest.approx(-0.25, abs=1e-15)
        bad = parse_config(set_path(cfg.raw, "initial.x", [8, 0]))
        with pytest.raises(RegionError):
            bad.initial_state()

    def test_set_path_copies(self):
        raw = {"a": {"b": 1}}
        new = set_path(raw, "a.c.d", 2)
        assert raw == {"a": {"b": 1}} and new == {"a": {"b": 1, "c": {"d": 2}}}
