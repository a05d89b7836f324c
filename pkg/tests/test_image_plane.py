"""Closed-form levitation analytics: equilibrium height, stiffnesses,
mode frequencies, the radius inversion and thermal amplitudes."""

import math

import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from trapsim.core import CONSTANTS, DomainError, derive_particle
from trapsim.image_plane import (
    DegenerateTrapError,
    equilibrium_height,
    image_potential,
    plane_mode_frequencies,
    radius_from_frequencies,
    spring_constants_fd,
    thermal_rms,
)

st_radius = st.floats(5e-6, 2e-4)
st_density = st.floats(500.0, 2e4)
st_field = st.floats(0.05, 1.5)


def test_reference_sphere_equilibrium(particle30):
    eq = plane_mode_frequencies(particle30)
    assert_allclose(eq.z0, 311.206e-6, rtol=1e-4)
    assert_allclose(eq.f_z, 56.5140, rtol=1e-5)
    assert_allclose(eq.f_beta, 377.173, rtol=1e-5)
    assert_allclose(eq.k_z, 1.07016e-4, rtol=1e-4)
    assert_allclose(eq.k_beta, 1.72748e-12, rtol=1e-4)


def test_smaller_sphere_sits_lower(particle27, particle30):
    z27 = equilibrium_height(particle27)
    assert_allclose(z27, 286.85e-6, rtol=1e-3)
    assert z27 < equilibrium_height(particle30)


def test_frequency_stiffness_identities(particle30):
    eq = plane_mode_frequencies(particle30)
    assert_allclose(eq.omega_z ** 2 * particle30.mass, eq.k_z, rtol=1e-12)
    assert_allclose(eq.omega_beta ** 2 * particle30.inertia, eq.k_beta,
                    rtol=1e-12)
    assert_allclose(eq.omega_z, math.sqrt(4.0 * CONSTANTS.g / eq.z0),
                    rtol=1e-12)


def test_fd_stiffness_matches_closed_form(particle30):
    eq = plane_mode_frequencies(particle30)
    k_z, k_beta = spring_constants_fd(particle30)
    assert_allclose(k_z, eq.k_z, rtol=1e-6)
    assert_allclose(k_beta, eq.k_beta, rtol=1e-6)


def test_equilibrium_minimises_potential(particle30):
    z0 = equilibrium_height(particle30)
    u0 = image_potential(z0, 0.0, particle30)
    for dz in (-0.02, -0.005, 0.005, 0.02):
        assert image_potential(z0 * (1.0 + dz), 0.0, particle30) > u0
    # potential is even in beta and increases away from beta = 0
    assert image_potential(z0, 0.1, particle30) == pytest.approx(
        image_potential(z0, -0.1, particle30))
    assert image_potential(z0, 0.1, particle30) > u0


@given(st_radius, st_density, st_field)
def test_height_scaling_power_law(radius, density, field):
    # z0 scales as a^(3/4) at fixed density and magnetisation
    p1 = derive_particle(radius=radius, density=density, remanent_field=field)
    p2 = derive_particle(radius=2.0 * radius, density=density,
                         remanent_field=field)
    ratio = equilibrium_height(p2) / equilibrium_height(p1)
    assert_allclose(ratio, 2.0 ** 0.75, rtol=1e-10)


@given(st_radius, st_density, st_field)
def test_radius_inversion_roundtrip(radius, density, field):
    p = derive_particle(radius=radius, density=density, remanent_field=field)
    eq = plane_mode_frequencies(p)
    recovered = radius_from_frequencies(eq.omega_z, eq.omega_beta)
    assert_allclose(recovered, radius, rtol=1e-10)


def test_radius_inversion_ignores_density(particle30):
    # the inversion uses only the frequency pair, so a sphere of any
    # density producing the same pair maps back to the same radius
    eq = plane_mode_frequencies(particle30)
    a = radius_from_frequencies(eq.omega_z, eq.omega_beta)
    assert_allclose(a, particle30.radius, rtol=1e-10)


def test_thermal_rms_reference_values(particle30):
    eq = plane_mode_frequencies(particle30)
    assert_allclose(thermal_rms(4.2, eq.k_z), 7.3611e-10, rtol=1e-4)
    assert_allclose(thermal_rms(4.2, eq.k_beta), 5.7938e-6, rtol=1e-4)


@given(st.floats(0.01, 300.0), st.floats(1e-14, 1.0))
def test_thermal_rms_equipartition(temperature, k):
    x = thermal_rms(temperature, k)
    assert_allclose(0.5 * k * x * x, 0.5 * CONSTANTS.kB * temperature,
                    rtol=1e-12)


def test_domain_errors(particle30):
    with pytest.raises(DomainError):
        image_potential(0.0, 0.0, particle30)
    with pytest.raises(DomainError):
        image_potential(-1e-4, 0.0, particle30)
    with pytest.raises(DomainError):
        radius_from_frequencies(0.0, 100.0)
    unmagnetised = derive_particle(radius=30e-6, density=7430.0,
                                   remanent_field=0.0)
    with pytest.raises(DegenerateTrapError):
        equilibrium_height(unmagnetised)
