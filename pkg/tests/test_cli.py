import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from porohyst import cli, hysteresis, kernels, selftest
from porohyst.solver import Simulation, SolverError

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).parent / "golden"


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        else:
            out[prefix + k] = v
    return out


def test_smooth_benchmark_matches_golden(tmp_path):
    assert cli.main(["run", "--config", str(CONFIGS / "smooth_1d.cfg"), "--out", str(tmp_path)]) == 0
    got = _flatten(json.loads((tmp_path / "summary.json").read_text()))
    want = _flatten(json.loads((GOLDEN / "smooth_1d_summary.json").read_text()))
    assert got.keys() == want.keys()
    for k, v in want.items():
        if isinstance(v, float):
            assert abs(got[k] - v) <= 1e-10 * max(1.0, abs(v)), k
        else:
            assert got[k] == v, k
    assert sorted(os.listdir(tmp_path / "snapshots")) == [f"step_{s:07d}.snap" for s in (250, 500, 750, 1000)]


def test_zero_preset_summary(tmp_path, capsys):
    assert cli.main(["run", "--config", str(CONFIGS / "zero.cfg"), "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["residual_max"] == 0.0
    assert s["sup_p"] == 0.0
    assert s["energy_final"]["e_kinetic"] == 0.0 and s["energy_final"]["e_vp"] == 0.0
    assert s["dq_plastic_total"] == 0.0 and s["dq_preisach_total"] == 0.0
    assert "residual_max=0.000e+00" in capsys.readouterr().out


def test_equal_growth_exponents_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("run.preset = smooth_1d\nmaterial.growth_a = 1.0\nmaterial.growth_b = 1.0\n")
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "conductivity-growth" in err
    assert not (tmp_path / "o").exists()


def test_config_errors_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("solver.warp = 9\n")
    assert cli.main(["run", "--config", str(cfg)]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert "config error" in capsys.readouterr().err


def test_runtime_error_exit_3_with_step(tmp_path, capsys, monkeypatch):
    def boom(self, state):
        raise SolverError(state.step + 1, "injected failure")

    monkeypatch.setattr(Simulation, "advance", boom)
    assert cli.main(["run", "--config", str(CONFIGS / "zero.cfg"), "--out", str(tmp_path)]) == 3
    assert "step 1" in capsys.readouterr().err


def test_selftest_passes(capsys):
    assert cli.main(["selftest", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.count("PASS") == 8


def test_sign_flip_in_play_is_caught(monkeypatch, capsys):
    monkeypatch.setattr(hysteresis, "play_step", lambda xi, p, r: np.minimum(p - r, np.maximum(p + r, xi)))
    assert cli.main(["selftest"]) == cli.EXIT_SELFTEST
    out = capsys.readouterr().out
    assert "FAIL  play energy identity" in out


def test_volumetric_plastic_flow_is_caught(monkeypatch, capsys):
    honest = kernels.radial_return

    def leaky(sig, deps, mu, lam, sy):
        s, ep, dq = honest(sig, deps, mu, lam, sy)
        ep = ep + 1e-3 * np.array([1.0, 1.0, 1.0, 0, 0, 0]) * (np.abs(ep).sum(axis=1, keepdims=True) > 0)
        return s, ep, dq

    monkeypatch.setattr(kernels, "radial_return", leaky)
    assert not selftest.run(seed=0, out=print)
    out = capsys.readouterr().out
    assert "FAIL  plastic flow deviatoric" in out


def test_csv_is_bitwise_deterministic(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("run.preset = smooth_2d\nsolver.nx = 4\nsolver.ny = 4\nsolver.t_end = 0.02\n")
    for name in ("a", "b"):
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / name), "--threads", "2"]) == 0
    assert (tmp_path / "a" / "diagnostics.csv").read_bytes() == (tmp_path / "b" / "diagnostics.csv").read_bytes()


def test_resume_through_the_cli(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("run.preset = smooth_1d\nsolver.t_end = 0.04\nsolver.snapshot_every = 20\n")
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "full")]) == 0
    rc = tmp_path / "r.cfg"
    rc.write_text(cfg.read_text() + "run.resume = full/snapshots/step_0000020.snap\n")
    assert cli.main(["run", "--config", str(rc), "--out", str(tmp_path / "resumed")]) == 0
    a = (tmp_path / "full" / "final.snap").read_text()
    b = (tmp_path / "resumed" / "final.snap").read_text()
    assert a == b


def test_sweep_and_one_element_sequence(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("run.preset = delta_sweep\nsolver.t_end = 0.02\nsolver.delta_seq = 1, 0.5, 0.25\n")
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "sw")]) == 0
    lines = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    assert len(lines) == 2 + 2
    one = tmp_path / "one.cfg"
    one.write_text("run.preset = smooth_1d\nsolver.t_end = 0.02\nsolver.delta_seq = 0.5\n")
    assert cli.main(["sweep", "--config", str(one), "--out", str(tmp_path / "one")]) == 0
    assert len((tmp_path / "one" / "sweep.csv").read_text().splitlines()) == 2
    summary = json.loads((tmp_path / "one" / "run_00" / "summary.json").read_text())
    assert summary["delta"] == 0.5


def test_study_writes_orders(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("run.preset = dt_study\nsolver.t_end = 0.04\n")
    assert cli.main(["study", "--config", str(cfg), "--out", str(tmp_path / "st")]) == 0
    text = (tmp_path / "st" / "study.csv").read_text().splitlines()
    assert text[0] == "# porohyst study v1"
    assert len(text) == 4
    bad = tmp_path / "b.cfg"
    bad.write_text("run.preset = smooth_1d\n")
    assert cli.main(["study", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "porohyst", "selftest"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "all properties hold" in out.stdout
