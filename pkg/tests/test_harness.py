import json
import math

import numpy as np
import pytest

from wsspulse import harness
from wsspulse.channel import flat_scattering
from wsspulse.cpmaps import SystemConfig, db_to_linear
from wsspulse.harness import (CSV_FIELDS, SweepScenario, build_sweep, mc_validate, read_csv,
                              run_sweep, sinr_gap_db)
from wsspulse.optim import METHODS, lattice_for
from wsspulse.tfcore import Lattice, cp_ofdm_pulses, gaussian_pulse

TABLE = [(0, 74, 1), (1, 37, 2), (5, 12, 8), (9, 7, 16), (29, 2, 32), (49, 1, 64), (149, 0, 256)]


def test_build_sweep_reference_rows():
    sc = build_sweep(0.5)
    assert [(s.tau_d, s.B_D, s.N) for s in sc] == TABLE
    assert all(s.L == 512 and s.sigma2_db == -20.0 for s in sc)
    assert all(abs(s.P - 150) <= 2 for s in sc)
    sc2 = build_sweep(2.0)
    assert [(s.tau_d, s.B_D, s.N) for s in sc2] == [(t, b, 2 * n) for t, b, n in TABLE]
    assert all(s.scheme == "real" for s in sc2)
    assert all(s.lattice().epsilon == 2.0 for s in sc2)


def test_build_sweep_custom():
    sc = build_sweep(1.0, L=64)
    assert len(sc) == 7
    for s in sc:
        Lat = s.lattice()
        assert 64 % Lat.a == 0 and 64 % Lat.b == 0 and Lat.epsilon == 1.0
    assert sc[0].tau_d == 0 and sc[-1].B_D == 0
    assert all(s.tau_d >= 1 and s.B_D >= 1 for s in sc[1:-1])
    with pytest.raises(ValueError):
        SweepScenario(5, 1, 512, 0.5, 512)


def test_identity_scenario_biorthogonal_families():
    s = SweepScenario(0, 0, 4, 0.5, 32, -20.0)
    res = run_sweep([s], ["iota", "rectangular"])
    for r in res:
        assert r.ok, r.error
        assert r.interference < 1e-10
    iota = res[0]
    assert iota.sinr_db == pytest.approx(20.0, abs=1e-8)


def _check_rows(res):
    for r in res:
        assert r.ok, r.error
        s = r.scenario
        lin = r.gain / (db_to_linear(s.sigma2_db) + r.interference)
        assert 10 * math.log10(lin) == pytest.approx(r.sinr_db, rel=1e-9)


def test_scaled_sweep_properties():
    sc = build_sweep(0.5, L=64)
    res = run_sweep(sc, METHODS)
    assert len(res) == 7 * len(METHODS)
    _check_rows(res)
    by = {(r.scenario.tau_d, r.scenario.B_D, r.family): r for r in res}
    for s in sc:
        key = (s.tau_d, s.B_D)
        # lower-bound design stays below the iterated gain
        assert by[key + ("gain_lower_bound",)].gain <= by[key + ("gain_opt",)].gain + 1e-9
        if s.tau_d == 0 or s.B_D == 0:
            assert by[key + ("gain_opt",)].gain == pytest.approx(1.0, abs=1e-6)
        else:
            sinr = {f: by[key + (f,)].sinr_db for f in METHODS}
            assert sinr["sinr_opt"] >= sinr["tightened_gain_opt"] - 0.1
            assert sinr["tightened_gain_opt"] >= sinr["gain_opt"] - 0.1
            assert sinr["tightened_gain_opt"] >= sinr["matched_gaussian"] - 0.1
            assert sinr["sinr_opt"] >= sinr["matched_gaussian"]
    gaps = sinr_gap_db(res, "sinr_opt", "matched_gaussian")
    assert set(gaps) == {(s.tau_d, s.B_D) for s in sc}


def test_reproducible_and_thread_independent(tmp_path):
    sc = build_sweep(0.5, L=32)
    fams = ["matched_gaussian", "gain_opt", "iota"]
    a = run_sweep(sc, fams, out=tmp_path / "a.csv", base_seed=9)
    b = run_sweep(sc, fams, out=tmp_path / "b.csv", base_seed=9, threads=3)
    assert [r.row() for r in a] == [r.row() for r in b]
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert [r.seed for r in a] == [9 ^ k for k in range(len(a))]


def test_csv_and_json_outputs(tmp_path):
    sc = build_sweep(0.5, L=32)[:2]
    out = tmp_path / "s.csv"
    res = run_sweep(sc, ["matched_gaussian", "rectangular"], out=out)
    rows = read_csv(out)
    assert tuple(rows[0].keys()) == CSV_FIELDS
    assert len(rows) == 4
    assert float(rows[0]["gain"]) == res[0].gain
    data = json.loads(out.with_suffix(".json").read_text())
    assert [d["family"] for d in data] == [r["family"] for r in rows]
    assert set(data[0]) == set(CSV_FIELDS)


def test_cell_failure_is_recorded(monkeypatch):
    real = harness.design_family

    def flaky(cfg, family, cache=None):
        if family == "iota":
            raise RuntimeError("boom")
        return real(cfg, family, cache)

    monkeypatch.setattr(harness, "design_family", flaky)
    res = run_sweep(build_sweep(0.5, L=32)[:1], ["iota", "matched_gaussian"])
    assert not res[0].ok and "boom" in res[0].error and math.isnan(res[0].gain)
    assert res[1].ok
    with pytest.raises(ValueError):
        run_sweep(build_sweep(0.5, L=32)[:1], ["nonsense"])


def test_threads_env(monkeypatch):
    monkeypatch.setenv("WSSPULSE_THREADS", "3")
    assert harness.default_threads() == 3
    monkeypatch.setenv("WSSPULSE_THREADS", "x")
    assert harness.default_threads() == 1


def test_mc_validate_identity_exact():
    L = 16
    cfg = SystemConfig(flat_scattering(L, 0, 0), Lattice(4, 4, L), 0.01)
    g, y = cp_ofdm_pulses(L, 4, 0)
    rec = mc_validate(cfg, g, y, 100, seed=0)
    assert rec.a.empirical == pytest.approx(1.0, abs=1e-12)
    assert rec.a.stderr == 0 and rec.a.z == 0 and rec.b.z == 0


def test_mc_validate_statistics_and_m_independence():
    L = 64
    cfg = SystemConfig(flat_scattering(L, 5, 2), lattice_for(L, 0.5, 8), 0.01)
    g, y = gaussian_pulse(L, 60.0), gaussian_pulse(L, 60.0, center=34.5)
    r0 = mc_validate(cfg, g, y, 10_000, seed=1)
    r1 = mc_validate(cfg, g, y, 10_000, seed=2, ref=(3, 5))
    for r in (r0, r1):
        assert r.max_abs_z() < 3
    d = r0.a.empirical - r1.a.empirical
    assert abs(d) < 3 * math.hypot(r0.a.stderr, r1.a.stderr)
    js = r0.to_json()
    assert set(js["a"]) == {"empirical", "stderr", "analytic", "z"}
    with pytest.raises(ValueError):
        mc_validate(cfg, g, y, 10, seed=0)


def test_mc_validate_real_scheme_halving():
    L = 64
    cfg = SystemConfig(flat_scattering(L, 5, 2), lattice_for(L, 2.0, 16), 0.01, "real")
    g, y = gaussian_pulse(L, 60.0), gaussian_pulse(L, 60.0, center=34.5)
    rec = mc_validate(cfg, g, y, 10_000, seed=4)
    assert rec.scheme == "real" and rec.max_abs_z() < 3
    full = SystemConfig(cfg.C, cfg.Lat, cfg.sigma2, "complex")
    cx = mc_validate(full, g, y, 10_000, seed=4)
    assert rec.a.analytic == pytest.approx(0.5 * cx.a.analytic)
    assert np.isfinite(rec.b.z)
