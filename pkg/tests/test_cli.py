"""End-to-end command-line runs, in process via ``main(argv)``.

The heavy solver commands run at reduced panel counts here; the default
resolution is exercised by the acceptance suite.
"""

import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from trapsim.cli import main
from trapsim.dynamics import SWEEP_CSV_HEADER, synthesize_ringdown
from trapsim.noise import (
    SpectrumRecord,
    lorentzian_psd,
    save_ringdown_csv,
    save_spectrum_csv,
)

CFG30 = "configs/sphere30.ini"
CFG27 = "configs/sphere27.ini"


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    assert code == 0, out.err
    return json.loads(out.out)


def run_fail(capsys, argv, expect_code=2):
    code = main(argv)
    err = capsys.readouterr().err
    assert code == expect_code
    return err


# ------------------------------------------------------------------
# analyze
# ------------------------------------------------------------------

def test_analyze_reports_closed_forms(capsys):
    doc = run_json(capsys, ["analyze", "-c", CFG30])
    assert doc["radius_source"] == "config"
    assert_allclose(doc["radius_um"], 30.1, rtol=1e-12)
    assert_allclose(doc["z0_m"], 311.206e-6, rtol=1e-4)
    assert_allclose(doc["f_z_hz"], 56.514, rtol=1e-4)
    assert_allclose(doc["f_beta_hz"], 377.173, rtol=1e-4)
    assert_allclose(doc["mass_kg"], 8.48744e-10, rtol=1e-4)
    assert doc["temperature_k"] == 4.2
    assert doc["thermal_z_rms_m"] > 0.0


def test_analyze_radius_inversion(capsys):
    doc = run_json(capsys, ["analyze", "-c", CFG30,
                            "--radius-from", "56.5", "377"])
    assert doc["radius_source"] == "frequencies"
    assert_allclose(doc["radius_um"], 30.1, rtol=0.01)


def test_analyze_writes_output_file(capsys, tmp_path):
    out = tmp_path / "report.json"
    code = main(["analyze", "-c", CFG30, "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert_allclose(doc["f_z_hz"], 56.514, rtol=1e-4)


def test_analyze_uses_env_config(capsys, monkeypatch):
    monkeypatch.setenv("TRAPSIM_CONFIG", CFG30)
    doc = run_json(capsys, ["analyze"])
    assert_allclose(doc["f_z_hz"], 56.514, rtol=1e-4)


def test_analyze_without_config_fails(capsys, monkeypatch):
    monkeypatch.delenv("TRAPSIM_CONFIG", raising=False)
    err = run_fail(capsys, ["analyze"])
    assert err.startswith("trapsim: error:")
    assert "TRAPSIM_CONFIG" in err


def test_missing_config_file(capsys):
    err = run_fail(capsys, ["analyze", "-c", "/nope/missing.ini"])
    assert "missing.ini" in err


def test_config_missing_key_is_reported(capsys, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[particle]\nradius_um = 30\ndensity_kg_m3 = 7430\n")
    err = run_fail(capsys, ["analyze", "-c", str(bad)])
    assert "particle.remanent_field_t" in err


# ------------------------------------------------------------------
# solve
# ------------------------------------------------------------------

def test_solve_untilted(capsys):
    doc = run_json(capsys, ["solve", "-c", CFG30, "--resolution", "1000"])
    assert doc["tilt_deg"] == 0.0
    assert doc["resolution"] == 1000
    assert doc["panel_count"] == 973
    assert doc["condition_estimate"] > 1.0
    eq = doc["equilibrium"]
    assert abs(eq["x_m"]) < 1e-6
    assert_allclose(eq["z_m"], 310.868e-6, rtol=1e-3)
    modes = {m["label"]: m for m in doc["modes"]}
    assert set(modes) == {"x", "y", "z", "beta", "alpha"}
    assert_allclose(modes["z"]["frequency_hz"], 56.5339, rtol=1e-3)
    assert_allclose(modes["beta"]["frequency_hz"], 367.673, rtol=1e-3)
    # At this resolution the spin mode shows up as a sub-Hz numerical
    # frequency rather than an exactly flat direction.
    assert modes["alpha"]["frequency_hz"] < 2.0


def test_solve_exports_mesh(capsys, tmp_path):
    mesh_csv = tmp_path / "mesh.csv"
    doc = run_json(capsys, ["solve", "-c", CFG30, "--resolution", "500",
                            "--mesh-csv", str(mesh_csv)])
    assert doc["panel_count"] == 483
    with open(mesh_csv) as fh:
        assert fh.readline().strip() == "cx,cy,cz,nx,ny,nz,area,strength"
        assert len(fh.readlines()) == 483


def test_solve_resolution_floor(capsys):
    err = run_fail(capsys, ["solve", "-c", CFG30, "--resolution", "100"])
    assert "resolution" in err


# ------------------------------------------------------------------
# sweep
# ------------------------------------------------------------------

def test_sweep_tilt_writes_csv_and_svg(capsys, tmp_path):
    out = tmp_path / "sweep.csv"
    svg = tmp_path / "sweep.svg"
    rc = main(["sweep", "-c", CFG30, "--tilt-range", "0:1:3",
               "--resolution", "1000", "--out", str(out),
               "--svg", str(svg)])
    assert rc == 0
    # sweep talks through its output files, not stdout
    assert capsys.readouterr().out == ""
    lines = out.read_text().splitlines()
    assert lines[0] == SWEEP_CSV_HEADER
    assert len(lines) == 4
    angles = [float(row.split(",")[0]) for row in lines[1:]]
    assert_allclose(angles, [0.0, 0.5, 1.0], atol=1e-12)
    # every row carries the five coordinates and five frequencies
    assert all(len(row.split(",")) == 11 for row in lines[1:])
    assert svg.read_text().lstrip().startswith("<?xml")


def test_sweep_pressure_range(capsys, tmp_path):
    out = tmp_path / "rates.csv"
    rc = main(["sweep", "-c", CFG27, "--pressure-range", "1e-6:1e-4:5",
               "--out", str(out)])
    assert rc == 0
    assert capsys.readouterr().out == ""
    lines = out.read_text().splitlines()
    assert lines[0] == "P_mbar,side,inv_tau_per_s,mode_label"
    assert len(lines) == 11  # 5 pressures x 2 modes
    assert all(row.split(",")[1] == "cold" for row in lines[1:])
    # free-molecular rates scale linearly with pressure
    first = float(lines[1].split(",")[2])
    last = float(lines[-2].split(",")[2])
    assert_allclose(last / first, 100.0, rtol=1e-9)


def test_sweep_needs_exactly_one_range(capsys, tmp_path):
    run_fail(capsys, ["sweep", "-c", CFG30, "--out",
                      str(tmp_path / "x.csv")])
    run_fail(capsys, ["sweep", "-c", CFG30, "--tilt-range", "0:1:3",
                      "--pressure-range", "1e-6:1e-4:3",
                      "--out", str(tmp_path / "x.csv")])


def test_sweep_range_syntax(capsys, tmp_path):
    err = run_fail(capsys, ["sweep", "-c", CFG30, "--tilt-range", "0:3",
                            "--out", str(tmp_path / "x.csv")])
    assert "start:stop:steps" in err


# ------------------------------------------------------------------
# fit
# ------------------------------------------------------------------

def test_fit_ringdown_roundtrip(capsys, tmp_path):
    rec = synthesize_ringdown(377.0, tau=30.0, initial_amplitude=1.0,
                              coeffs=None, sample_rate=4000.0,
                              duration=90.0, noise_level=0.01, seed=7)
    path = tmp_path / "ring.csv"
    save_ringdown_csv(str(path), rec)
    doc = run_json(capsys, ["fit", "ringdown", str(path)])
    assert doc["decaying"] is True
    assert_allclose(doc["tau_s"], 30.0, rtol=1e-2)
    assert_allclose(doc["carrier_frequency_hz"], 377.0, rtol=1e-3)
    # q is derived from the fitted carrier, not the nominal one
    assert_allclose(doc["q"],
                    math.pi * doc["carrier_frequency_hz"] * doc["tau_s"],
                    rtol=1e-9)


def test_fit_psd(capsys, tmp_path):
    f = np.arange(50.0, 260.0, 0.03125)
    s = lorentzian_psd(f, 1e-16, 3.82e-14, 156.8, 421.0)
    path = tmp_path / "psd.csv"
    save_spectrum_csv(str(path), SpectrumRecord(
        f, s, df=0.03125, n_segments=1, sample_rate=8192.0))
    doc = run_json(capsys, ["fit", "psd", str(path),
                            "--band", "100", "215", "--exclude-bins", "0"])
    assert_allclose(doc["q"], 421.0, rtol=5e-3)
    assert_allclose(doc["a1"], 3.82e-14, rtol=5e-3)
    assert doc["q_fixed"] is False
    assert doc["excluded_bins"] == 0
    assert doc["band_hz"] == [100.0, 215.0]

    fixed = run_json(capsys, ["fit", "psd", str(path),
                              "--band", "100", "215", "--exclude-bins", "0",
                              "--fix-q", "421"])
    assert fixed["q"] == 421.0
    assert fixed["q_fixed"] is True
    assert fixed["q_stderr"] == 0.0


def test_fit_damping_from_sweep(capsys, tmp_path):
    out = tmp_path / "rates.csv"
    assert main(["sweep", "-c", CFG27, "--pressure-range", "1e-6:1e-4:8",
                 "--out", str(out)]) == 0
    capsys.readouterr()
    doc = run_json(capsys, ["fit", "damping", str(out)])
    assert doc["side"] == "cold"
    assert doc["order"] == 1
    fits = doc["fits"]
    assert set(fits) == {"z", "beta"}
    # slope of rate versus cold-side pressure in 1/(s mbar)
    assert_allclose(fits["z"]["coefficients"][1], 5.930265, rtol=1e-4)
    assert_allclose(fits["beta"]["coefficients"][1], 5.322637, rtol=1e-4)
    # both match the helium free-molecular benchmark values within 3%
    assert abs(fits["z"]["coefficients"][1] / 5.96 - 1.0) < 0.03
    assert abs(fits["beta"]["coefficients"][1] / 5.35 - 1.0) < 0.03


def test_fit_unknown_kind(capsys, tmp_path):
    assert main(["fit", "wavelet", str(tmp_path / "x.csv")]) == 2


def test_fit_missing_input_file(capsys):
    err = run_fail(capsys, ["fit", "ringdown", "/nope/missing.csv"],
                   expect_code=1)
    assert err.startswith("trapsim: error:")


# ------------------------------------------------------------------
# sense
# ------------------------------------------------------------------

def test_sense_measured_torque(capsys):
    doc = run_json(capsys, ["sense", "-c", CFG27, "--mode", "alpha",
                            "--frequency", "160", "--q", "421",
                            "--measured-torque", "6.4719e-22"])
    assert doc["torque_source"] == "measured"
    assert_allclose(doc["torque_asd_nm_per_sqrt_hz"], 6.4719e-22, rtol=1e-9)
    assert_allclose(doc["field_asd_t_per_sqrt_hz"], 1.389e-14, rtol=1e-3)
    assert_allclose(doc["field_asd_quantum_limit_t_per_sqrt_hz"],
                    5.670e-14, rtol=1e-3)


def test_sense_thermal_limit(capsys):
    doc = run_json(capsys, ["sense", "-c", CFG27, "--mode", "z",
                            "--frequency", "1", "--q", "3e7"])
    assert doc["torque_source"] == "thermal-limit"
    assert_allclose(doc["accel_asd_m_s2_per_sqrt_hz"], 2.816e-10, rtol=1e-3)


def test_sense_unknown_mode(capsys):
    err = run_fail(capsys, ["sense", "-c", CFG27, "--mode", "q",
                            "--frequency", "160", "--q", "421"])
    assert "unknown mode" in err


def test_seed_flag_is_accepted(capsys):
    doc = run_json(capsys, ["analyze", "-c", CFG30, "--seed", "5"])
    assert "f_z_hz" in doc
