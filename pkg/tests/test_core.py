import math

import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from trapsim.core import (
    CONSTANTS,
    GAS_MASSES,
    MBAR,
    Configuration,
    Environment,
    InvalidParameterError,
    MagnetParticle,
    TrapSystem,
    TrapsimError,
    atomic_write_text,
    derive_particle,
)

st_radius = st.floats(1e-6, 1e-3)
st_density = st.floats(100.0, 2.5e4)
st_field = st.floats(1e-3, 2.0)


def test_reference_sphere_derived_quantities(particle30):
    assert_allclose(particle30.mass, 8.48744e-10, rtol=1e-5)
    assert_allclose(particle30.inertia, 3.075884e-19, rtol=1e-5)
    assert_allclose(particle30.dipole_moment, 6.45411e-8, rtol=1e-5)


@given(st_radius, st_density, st_field)
def test_particle_scaling_identities(radius, density, field):
    p = derive_particle(radius=radius, density=density, remanent_field=field)
    volume = 4.0 / 3.0 * math.pi * radius ** 3
    assert_allclose(p.volume, volume, rtol=1e-12)
    assert_allclose(p.mass, density * volume, rtol=1e-12)
    assert_allclose(p.inertia, 0.4 * p.mass * radius ** 2, rtol=1e-12)
    assert_allclose(p.dipole_moment, field * volume / CONSTANTS.mu0, rtol=1e-12)


@pytest.mark.parametrize("kwargs", [
    {"radius": 0.0, "density": 7430.0, "remanent_field": 0.71},
    {"radius": -1e-6, "density": 7430.0, "remanent_field": 0.71},
    {"radius": 30e-6, "density": 0.0, "remanent_field": 0.71},
    {"radius": 30e-6, "density": 7430.0, "remanent_field": -0.1},
    {"radius": 30e-6, "density": 7430.0, "remanent_field": 0.71,
     "conductivity": -1.0},
    {"radius": 30e-6, "density": 7430.0, "remanent_field": 0.71,
     "chi_imag": -1e-3},
])
def test_particle_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        derive_particle(**kwargs)


def test_particle_is_frozen(particle30):
    with pytest.raises(AttributeError):
        particle30.radius = 1e-6


def test_trap_tilt_validation(particle30):
    with pytest.raises(InvalidParameterError):
        TrapSystem(well_radius=2e-3, well_depth=4e-3, particle=particle30,
                   tilt=-0.01)
    with pytest.raises(InvalidParameterError):
        TrapSystem(well_radius=2e-3, well_depth=4e-3, particle=particle30,
                   tilt=math.pi / 2)
    with pytest.raises(InvalidParameterError):
        TrapSystem(well_radius=0.0, well_depth=4e-3, particle=particle30)


def test_tilt_axis_is_normalised(particle30):
    trap = TrapSystem(well_radius=2e-3, well_depth=4e-3, particle=particle30,
                      tilt=math.radians(3.0), tilt_axis=(3.0, 4.0))
    assert_allclose(math.hypot(*trap.tilt_axis), 1.0, rtol=1e-12)
    assert_allclose(trap.tilt_axis, (0.6, 0.8), rtol=1e-12)


def test_gravity_direction_untilted_and_tilted(particle30):
    trap = TrapSystem(well_radius=2e-3, well_depth=4e-3, particle=particle30)
    assert_allclose(trap.gravity_direction(), (0.0, 0.0, -1.0), atol=1e-15)
    tilted = TrapSystem(well_radius=2e-3, well_depth=4e-3,
                        particle=particle30, tilt=math.radians(3.0))
    gx, gy, gz = tilted.gravity_direction()
    assert_allclose(math.sqrt(gx ** 2 + gy ** 2 + gz ** 2), 1.0, rtol=1e-12)
    assert gx == pytest.approx(math.sin(math.radians(3.0)))
    assert gz == pytest.approx(-math.cos(math.radians(3.0)))


def test_gravitational_potential_slope(trap30, particle30):
    # moving up along the well axis of an untilted trap costs m g dz
    u1 = trap30.gravitational_potential(0.0, 0.0, 3e-4)
    u2 = trap30.gravitational_potential(0.0, 0.0, 4e-4)
    assert_allclose(u2 - u1, particle30.mass * CONSTANTS.g * 1e-4, rtol=1e-10)


def test_configuration_validation():
    with pytest.raises(InvalidParameterError):
        Configuration(0.0, 0.0, 0.0)
    with pytest.raises(InvalidParameterError):
        Configuration(0.0, 0.0, -1e-4)
    with pytest.raises(InvalidParameterError):
        Configuration(math.nan, 0.0, 1e-4)


@given(st.floats(-1.5, 1.5), st.floats(-3.2, 3.2))
def test_moment_direction_is_unit(beta, alpha):
    c = Configuration(0.0, 0.0, 3e-4, beta=beta, alpha=alpha)
    d = c.moment_direction()
    assert_allclose(d[0] ** 2 + d[1] ** 2 + d[2] ** 2, 1.0, rtol=1e-12)
    assert d[2] == pytest.approx(math.sin(beta))


def test_environment_defaults_and_validation():
    env = Environment()
    assert env.temperature_cold == 4.2
    assert env.gas_mass == GAS_MASSES["helium"]
    with pytest.raises(InvalidParameterError):
        Environment(temperature_warm=0.0)
    with pytest.raises(InvalidParameterError):
        Environment(gas_mass=0.0)


def test_gas_masses_table():
    assert set(GAS_MASSES) == {"hydrogen", "helium", "neon", "nitrogen",
                               "argon"}
    assert GAS_MASSES["helium"] == pytest.approx(4.0026 * 1.66053906660e-27,
                                                 rel=1e-4)
    assert MBAR == 100.0


def test_exception_hierarchy():
    assert issubclass(InvalidParameterError, TrapsimError)
    assert issubclass(InvalidParameterError, ValueError)


def test_atomic_write_text(tmp_path):
    target = tmp_path / "out.json"
    atomic_write_text(str(target), "hello\n")
    assert target.read_text() == "hello\n"
    atomic_write_text(str(target), "replaced\n")
    assert target.read_text() == "replaced\n"
    # no stray temp files left behind
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]
