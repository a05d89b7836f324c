import math

import pytest
from numpy.testing import assert_allclose

from trapsim.config import ConfigError, load_config
from trapsim.core import GAS_MASSES, TrapsimError


def write(tmp_path, text):
    path = tmp_path / "scenario.ini"
    path.write_text(text)
    return str(path)


FULL = """
[particle]
radius_um = 27
density_kg_m3 = 7430
remanent_field_t = 0.71
conductivity_s_m = 1e6
chi_imag = 1.4e-3

[trap]
well_radius_mm = 2.0
well_depth_mm = 4.0
tilt_deg = 3
tilt_axis = y

[environment]
temperature_cold_k = 4.2
temperature_warm_k = 293
pressure_warm_mbar = 1e-4
gas = helium
tube_radius_cm = 0.97

[constants]
g_m_s2 = 9.80
"""


def test_full_config(tmp_path):
    cfg = load_config(write(tmp_path, FULL))
    assert_allclose(cfg.particle.radius, 27e-6, rtol=1e-12)
    assert_allclose(cfg.particle.conductivity, 1e6, rtol=1e-12)
    assert_allclose(cfg.trap.well_radius, 2e-3, rtol=1e-12)
    assert_allclose(cfg.trap.tilt, math.radians(3.0), rtol=1e-12)
    assert cfg.trap.tilt_axis == (0.0, 1.0)
    assert_allclose(cfg.environment.pressure_warm, 1e-2, rtol=1e-12)  # Pa
    assert cfg.environment.gas_mass == GAS_MASSES["helium"]
    assert_allclose(cfg.environment.tube_radius, 0.0097, rtol=1e-12)
    assert cfg.constants.g == 9.80
    assert len(cfg.sha256) == 64


def test_shipped_configs_load():
    cfg30 = load_config("configs/sphere30.ini")
    assert_allclose(cfg30.particle.radius, 30.1e-6, rtol=1e-12)
    assert cfg30.trap.tilt == 0.0
    cfg27 = load_config("configs/sphere27.ini")
    assert_allclose(cfg27.particle.radius, 27e-6, rtol=1e-12)
    assert_allclose(cfg27.particle.chi_imag, 1.4e-3, rtol=1e-12)
    assert_allclose(cfg27.trap.tilt, math.radians(3.0), rtol=1e-12)


def test_particle_only_config(tmp_path):
    cfg = load_config(write(tmp_path, """
[particle]
radius_um = 30.1
density_kg_m3 = 7430
remanent_field_t = 0.71
"""))
    assert cfg.trap is None
    assert cfg.particle is not None
    # environment falls back to its defaults
    assert cfg.environment.temperature_cold == 4.2


def test_tilt_axis_components(tmp_path):
    cfg = load_config(write(tmp_path, FULL.replace(
        "tilt_axis = y", "tilt_axis = 0.6, 0.8")))
    assert_allclose(cfg.trap.tilt_axis, (0.6, 0.8), rtol=1e-12)


def test_gas_mass_override(tmp_path):
    text = FULL.replace("gas = helium", "gas_mass_kg = 6.6e-27")
    cfg = load_config(write(tmp_path, text))
    assert cfg.environment.gas_mass == 6.6e-27


def test_missing_required_key_is_named(tmp_path):
    text = FULL.replace("remanent_field_t = 0.71\n", "")
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, text))
    assert "particle.remanent_field_t" in str(err.value)


def test_unknown_key_and_section_errors(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, FULL + "\nmystery_key = 1\n"))
    assert "mystery_key" in str(err.value)
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, FULL + "\n[magnetometer]\nrange = 1\n"))
    assert "magnetometer" in str(err.value)


def test_trap_requires_particle(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, """
[trap]
well_radius_mm = 2.0
well_depth_mm = 4.0
"""))


def test_gas_keys_mutually_exclusive(tmp_path):
    text = FULL.replace("gas = helium",
                        "gas = helium\ngas_mass_kg = 6.6e-27")
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))


def test_unknown_gas_name(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, FULL.replace("gas = helium",
                                                 "gas = xenon")))
    assert "xenon" in str(err.value)


def test_invalid_number_mentions_path(tmp_path):
    text = FULL.replace("radius_um = 27", "radius_um = smallish")
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, text))
    assert "scenario.ini" in str(err.value)


def test_missing_file_raises_config_error():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/scenario.ini")


def test_config_error_is_trapsim_value_error():
    assert issubclass(ConfigError, TrapsimError)
    assert issubclass(ConfigError, ValueError)
