from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from polarlets.cli import main
from polarlets.frame2d import FrameSpec2D

DATA = Path(__file__).parent / "data"
pytestmark = pytest.mark.filterwarnings("ignore:.*samples for.*unknowns")


def run(tmp_path, *argv):
    return main([*argv, "-q", "--out-dir", str(tmp_path)])


def _spec_file(tmp_path, data, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def _doubled(tmp_path):
    d = FrameSpec2D.default().to_dict()
    d["levels"][1]["coeffs"] = [[n, 2 * a, b] for n, a, b in d["levels"][1]["coeffs"]]
    return _spec_file(tmp_path, d, "doubled.json")


def test_calderon_default_passes(tmp_path):
    assert run(tmp_path, "calderon") == 0
    report = (tmp_path / "calderon_report.txt").read_text()
    assert "passed=true" in report


def test_frame_check_default_passes(tmp_path):
    assert run(tmp_path, "frame-check") == 0
    assert "passed=true" in (tmp_path / "frame_check_report.txt").read_text()


def test_frame_check_doubled_coefficients_fail(tmp_path):
    assert run(tmp_path, "frame-check", "--spec", _doubled(tmp_path)) == 1
    report = (tmp_path / "frame_check_report.txt").read_text()
    assert "passed=false" in report


@pytest.mark.parametrize("cmd", ["calderon", "frame-check", "laplacian", "taps", "transform"])
def test_missing_spec_file(tmp_path, cmd):
    assert run(tmp_path, cmd, "--spec", str(tmp_path / "absent.json")) == 2


def test_malformed_spec(tmp_path):
    assert run(tmp_path, "frame-check", "--spec", _spec_file(tmp_path, {"levels": 3})) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(tmp_path, "calderon", "--spec", str(bad)) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"j-max": 3, "points": 512}))
    assert run(tmp_path, "calderon", "--config", str(cfg)) == 0
    report = (tmp_path / "calderon_report.txt").read_text()
    assert "j_max=3" in report and "points=512" in report


@pytest.mark.parametrize("cfg", [{"bogus": 1}, {"points": "many"}, {"command": "taps"}, [1, 2]])
def test_config_rejected(tmp_path, cfg):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert run(tmp_path, "calderon", "--config", str(p)) == 2


def test_usage_errors(tmp_path):
    assert run(tmp_path, "no-such-command") == 2
    assert run(tmp_path, "eval-atom", "--j", "1", "--k", "0") == 2
    assert run(tmp_path, "calderon", "--threads", "0") == 2


def test_eval_atom_outputs(tmp_path):
    assert run(tmp_path, "eval-atom", "--j", "1", "--k", "0,0", "--t", "2", "--grid", "64") == 0
    for name in ("atom_spatial.csv", "atom_frequency.csv", "atom_spatial.pgm", "atom_frequency.pgm"):
        assert (tmp_path / name).stat().st_size > 0
    assert run(tmp_path, "eval-atom", "--j", "1", "--k", "0,0", "--t", "99") == 2


def test_eval_atom_profiles(tmp_path):
    assert run(tmp_path, "eval-atom", "--mode", "profile", "--r-step", "0.5") == 0
    lines = (tmp_path / "profiles.csv").read_text().splitlines()
    assert len(lines) == 1 + 33


def test_transform_shipped_image(tmp_path):
    assert run(tmp_path, "transform", "--input", str(DATA / "test128.pgm")) == 0
    rep = json.loads((tmp_path / "transform_report.json").read_text())
    assert rep["roundtrip_rel_l2"] < 1e-6 and rep["passed"]
    assert {"inputs", "versions", "timings"} <= set(rep)


def test_transform_data_errors(tmp_path):
    assert run(tmp_path, "transform", "--input", str(tmp_path / "absent.pgm")) == 4
    bad = tmp_path / "bad.pgm"
    bad.write_text("P2\n2 2\n255\n1 2 3\n")
    assert run(tmp_path, "transform", "--input", str(bad)) == 4


def test_taps_verify(tmp_path):
    assert run(tmp_path, "taps", "--j", "1", "--radius", "2", "--verify") == 0
    rep = json.loads((tmp_path / "taps_report.json").read_text())
    assert rep["max_abs_difference"] < 1e-6
    assert run(tmp_path, "taps", "--j", "2") == 2


def test_laplacian(tmp_path):
    assert run(tmp_path, "laplacian", "--atoms", "40") == 0
    rep = json.loads((tmp_path / "laplacian_report.json").read_text())
    assert rep["passed"]
    assert (tmp_path / "laplacian.txt.json").exists()
    assert run(tmp_path, "laplacian", "--spec", _spec_file(tmp_path, FrameSpec2D.default().to_dict())) == 2


def test_reconstruct_small(tmp_path):
    args = ["reconstruct-scattered", "--samples-uniform", "600", "--samples-boundary", "200",
            "--grid", "64", "--tol", "1"]
    assert run(tmp_path, *args, "--samples-out", str(tmp_path / "s.csv")) == 0
    rep = json.loads((tmp_path / "reconstruct_report.json").read_text())
    assert rep["samples_total"] == 800
    assert run(tmp_path, "reconstruct-scattered", "--samples-in", str(tmp_path / "s.csv"),
               "--grid", "64", "--tol", "1", "--report", str(tmp_path / "r2.json")) == 0
    assert json.loads((tmp_path / "r2.json").read_text())["masked_linf"] == rep["masked_linf"]


def test_reconstruct_errors(tmp_path):
    assert run(tmp_path, "reconstruct-scattered", "--samples-uniform", "20", "--samples-boundary", "5",
               "--lambda", "0", "--grid", "64") == 3
    bad = tmp_path / "s.csv"
    bad.write_text("x,y,value\n1,2\n")
    assert run(tmp_path, "reconstruct-scattered", "--samples-in", str(bad), "--grid", "64") == 4


def test_reconstruct_is_deterministic(tmp_path):
    args = ["reconstruct-scattered", "--samples-uniform", "300", "--samples-boundary", "100",
            "--grid", "64", "--tol", "1", "--seed", "4"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([*args, "-q", "--out-dir", str(a), "--samples-out", str(a / "s.csv")]) == 0
    assert main([*args, "-q", "--out-dir", str(b), "--samples-out", str(b / "s.csv")]) == 0
    assert (a / "s.csv").read_bytes() == (b / "s.csv").read_bytes()


def test_manifold_errors(tmp_path):
    assert run(tmp_path, "manifold-eval", "--mesh", str(tmp_path / "absent.obj"), "--resolution", "32") == 4
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0\n")
    assert run(tmp_path, "manifold-eval", "--mesh", str(bad), "--resolution", "32") == 4
    assert run(tmp_path, "manifold-eval", "--resolution", "40") == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "polarlets", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("polarlets ")
