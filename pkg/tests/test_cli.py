import json
import subprocess
import sys

import pytest

from wsspulse.cli import main
from wsspulse.io import write_pulse
from wsspulse.tfcore import cp_ofdm_pulses

SMALL = ["--L", "64", "--epsilon", "0.5"]


def run(*args):
    return main([str(a) for a in args])


def test_design_gain_writes_files(tmp_path, capsys):
    prefix = tmp_path / "d"
    rc = run("design", "--method", "gain", "--scattering", "flat:tau=5,bd=12", "--L", 512,
             "--epsilon", 0.5, "--out", prefix)
    assert rc == 0
    meta = json.loads((tmp_path / "d_meta.json").read_text())
    assert {"method", "objective", "iterations", "converged"} <= meta.keys()
    assert meta["method"] == "gain_opt"
    assert (tmp_path / "d_g.json").exists() and (tmp_path / "d_gamma.json").exists()


def test_design_sinr_then_evaluate_roundtrip(tmp_path, capsys):
    prefix = tmp_path / "s"
    assert run("design", "--method", "sinr", "--sigma2-db", -20, "--scattering", "flat:tau=3,bd=2",
               *SMALL, "--out", prefix) == 0
    meta = json.loads((tmp_path / "s_meta.json").read_text())
    vals = meta["objective_values"]
    assert all(b >= a - 1e-12 * abs(a) for a, b in zip(vals, vals[1:]))
    capsys.readouterr()
    before = (tmp_path / "s_g.json").read_bytes()
    assert run("evaluate", "--g", tmp_path / "s_g.json", "--gamma", tmp_path / "s_gamma.json",
               "--scattering", "flat:tau=3,bd=2", *SMALL) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["sinr"] == pytest.approx(meta["objective"], rel=1e-9)
    assert rep["frame"]["epsilon"] == 0.5
    assert (tmp_path / "s_g.json").read_bytes() == before


def test_design_missing_scattering(tmp_path, capsys):
    prefix = tmp_path / "x"
    assert run("design", "--method", "gain", *SMALL, "--out", prefix) == 2
    assert list(tmp_path.iterdir()) == []
    assert "scattering" in capsys.readouterr().err
    assert run("design", "--method", "bogus", "--scattering", "identity", *SMALL, "--out", prefix) == 2
    assert run("design", "--scattering", "flat:tau=x", *SMALL, "--out", prefix) == 2
    assert list(tmp_path.iterdir()) == []


def _onb_pair(tmp_path, L=16):
    g, y = cp_ofdm_pulses(L, 4, 0)
    write_pulse(g, tmp_path / "g.json")
    write_pulse(y, tmp_path / "y.json")
    return tmp_path / "g.json", tmp_path / "y.json"


def test_evaluate_identity_onb(tmp_path, capsys):
    g, y = _onb_pair(tmp_path)
    assert run("evaluate", "--g", g, "--gamma", y, "--scattering", "identity", "--L", 16,
               "--lattice", "4,4") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["interference"] == 0.0 and rep["gain"] == pytest.approx(1.0)


def test_evaluate_errors(tmp_path, capsys):
    g, y = _onb_pair(tmp_path)
    assert run("evaluate", "--g", g, "--gamma", y, "--scattering", "identity", "--L", 32,
               "--lattice", "4,4") == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"L": 16,\n  "samples": [[1, 0]')
    assert run("evaluate", "--g", bad, "--gamma", y, "--scattering", "identity", "--L", 16,
               "--lattice", "4,4") == 2
    assert "line 2" in capsys.readouterr().err


def test_sweep_rows_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--epsilon", 0.5, "--L", 32, "--sigma2-db", -20,
            "--families", "matched_gaussian,rectangular", "--seed", 3]
    assert run(*args, "--out", a) == 0
    assert run(*args, "--out", b, "--threads", 2) == 0
    lines = a.read_text().splitlines()
    assert len(lines) == 1 + 14
    assert lines[0].startswith("tau_d,B_D,N,epsilon,scheme,family,gain,interference,sinr_db,"
                               "bessel_bound,iterations,seed")
    assert a.read_bytes() == b.read_bytes()
    assert run("sweep", "--L", 32, "--families", "nope", "--out", tmp_path / "c.csv") == 2


def test_sweep_all_families_row_count(tmp_path, capsys):
    out = tmp_path / "all.csv"
    assert run("sweep", "--epsilon", 0.5, "--L", 32, "--out", out) == 0
    assert len(out.read_text().splitlines()) == 1 + 7 * 7


def test_mc_validate(tmp_path, capsys):
    g, y = _onb_pair(tmp_path)
    common = ["--g", g, "--gamma", y, "--L", 16, "--lattice", "4,4"]
    assert run("mc-validate", *common, "--scattering", "identity", "--K", 100) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["a"]["z"] == 0 and rep["a"]["empirical"] == pytest.approx(1.0)
    assert run("mc-validate", *common, "--scattering", "flat:tau=2,bd=1", "--K", 2000, "--seed", 1) == 0
    rep = json.loads(capsys.readouterr().out)
    assert abs(rep["a"]["z"]) < 3 and abs(rep["b"]["z"]) < 3
    assert run("mc-validate", *common, "--scattering", "identity", "--K", 10) == 2


def test_frame_report(tmp_path, capsys):
    g, y = _onb_pair(tmp_path)
    out = tmp_path / "fr.json"
    assert run("frame-report", "--gamma", y, "--L", 16, "--lattice", "4,4", "--out", out) == 0
    rep = json.loads(out.read_text())
    assert set(rep) == {"A", "B", "epsilon", "is_frame", "is_tight"}
    assert rep["is_tight"] and rep["B"] == pytest.approx(1.0)


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# test config\nL = 64\nepsilon=0.5\nscattering = flat:tau=3,bd=2\nmethod = gain\n")
    prefix = tmp_path / "c"
    assert run("design", "--config", cfg, "--out", prefix) == 0
    meta = json.loads((tmp_path / "c_meta.json").read_text())
    assert meta["L"] == 64 and meta["method"] == "gain_opt"
    assert run("design", "--config", cfg, "--method", "gaussian", "--out", prefix) == 0
    assert json.loads((tmp_path / "c_meta.json").read_text())["method"] == "matched_gaussian"
    cfg.write_text("colour = blue\n")
    assert run("design", "--config", cfg, "--out", prefix) == 2


@pytest.mark.parametrize("sub", ["design", "evaluate", "sweep", "mc-validate", "frame-report"])
def test_help_and_unknown_flags(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        main([sub, "--help"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        main([sub, "--no-such-flag"])
    assert exc.value.code == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "wsspulse.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "mc-validate" in out.stdout
