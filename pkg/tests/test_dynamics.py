"""Full-well equilibrium search, normal modes, tilt sweeps and the
anharmonic frequency machinery."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from trapsim.core import (
    Configuration,
    InvalidParameterError,
    PerturbativeRangeWarning,
    TrapSystem,
    UnstableEquilibriumError,
)
from trapsim.dynamics import (
    COORD_LABELS,
    SWEEP_CSV_HEADER,
    NonlinearCoefficients,
    find_equilibrium,
    frequency_shift,
    generalized_modes,
    mode_spectrum,
    nonlinear_coefficients,
    ode_frequency_oracle,
    synthesize_ringdown,
    tilt_sweep,
    write_sweep_csv,
)
from trapsim.image_plane import plane_mode_frequencies
from trapsim.noise import ringdown_frequency_trace


@pytest.fixture(scope="module")
def untilted_modes(trap30):
    eq = find_equilibrium(trap30, resolution=2000)
    return mode_spectrum(trap30, eq, resolution=2000)


# ------------------------------------------------------------------
# equilibrium and modes in the full well
# ------------------------------------------------------------------

def test_untilted_equilibrium_matches_plane_limit(untilted_modes, particle30):
    eq = untilted_modes.equilibrium
    plane = plane_mode_frequencies(particle30)
    assert abs(eq.x) < 1e-6 and abs(eq.y) < 1e-6
    assert_allclose(eq.z, 311.142e-6, rtol=2e-4)
    # finite well: the height barely moves from the infinite-plane value
    assert_allclose(eq.z, plane.z0, rtol=5e-3)
    assert abs(eq.beta) < 1e-3


def test_untilted_mode_frequencies(untilted_modes):
    assert_allclose(untilted_modes.frequency("z"), 56.4934, rtol=2e-4)
    assert_allclose(untilted_modes.frequency("beta"), 367.468, rtol=2e-4)
    assert set(untilted_modes.labels) == set(COORD_LABELS)


def test_untilted_azimuth_mode_is_marginal(untilted_modes):
    # alpha is the free rotation of the moment about the vertical
    idx = untilted_modes.labels.index("alpha")
    assert untilted_modes.marginal[idx]
    assert untilted_modes.frequency("alpha") == 0.0


def test_wall_softens_libration(untilted_modes, particle30):
    # the finite wall lowers f_beta a few percent below the plane value
    plane = plane_mode_frequencies(particle30)
    f_beta = untilted_modes.frequency("beta")
    assert f_beta < plane.f_beta
    assert f_beta > 0.95 * plane.f_beta


def test_mode_spectrum_unknown_label(untilted_modes):
    with pytest.raises(InvalidParameterError):
        untilted_modes.frequency("q")


# ------------------------------------------------------------------
# generalized eigenproblem unit cases
# ------------------------------------------------------------------

def test_generalized_modes_diagonal_case():
    k = np.diag([4.0, 9.0, 16.0, 1.0, 25.0])
    m = np.diag([1.0, 1.0, 4.0, 1.0, 1.0])
    modes = generalized_modes(k, m)
    expected = np.sort(np.sqrt(np.diag(k) / np.diag(m))) / (2.0 * math.pi)
    assert_allclose(modes.frequencies, expected, rtol=1e-12)
    assert sorted(modes.labels) == sorted(COORD_LABELS)
    assert not any(modes.marginal)


def test_generalized_modes_rejects_saddle():
    k = np.diag([4.0, 9.0, -1.0, 1.0, 25.0])
    m = np.eye(5)
    with pytest.raises(UnstableEquilibriumError):
        generalized_modes(k, m)


def test_generalized_modes_clamps_marginal_direction():
    k = np.diag([4.0, 9.0, 16.0, 25.0, 1e-9])
    modes = generalized_modes(k, np.eye(5))
    assert modes.marginal[0]
    assert modes.frequencies[0] == 0.0


# ------------------------------------------------------------------
# tilt sweep
# ------------------------------------------------------------------

def test_tilt_sweep_moves_sphere_uphill(trap30, tmp_path):
    tilts = [math.radians(0.5), math.radians(1.0)]
    points = tilt_sweep(trap30, tilts, resolution=1000)
    assert [p.tilt for p in points] == tilts
    x0 = [p.equilibrium.x for p in points]
    # gravity tilts along +x, so the sphere walks to larger x with angle
    assert 0.0 < x0[0] < x0[1]
    f_z = [p.spectrum.frequency("z") for p in points]
    assert abs(f_z[1] / f_z[0] - 1.0) < 0.02

    path = str(tmp_path / "sweep.csv")
    write_sweep_csv(path, points)
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == SWEEP_CSV_HEADER
    assert len(lines) == 3
    first = [float(v) for v in lines[1].split(",")]
    assert_allclose(first[0], 0.5, rtol=1e-12)
    assert_allclose(first[1], points[0].equilibrium.x, rtol=1e-12)


def test_tilt_sweep_range_validation(trap30):
    with pytest.raises(InvalidParameterError):
        tilt_sweep(trap30, [math.radians(11.0)], resolution=1000)
    with pytest.raises(InvalidParameterError):
        tilt_sweep(trap30, [], resolution=1000)


# ------------------------------------------------------------------
# anharmonic shifts
# ------------------------------------------------------------------

def test_shift_coefficients_closed_forms(particle30):
    eq = plane_mode_frequencies(particle30)
    cz = nonlinear_coefficients("z", eq)
    cb = nonlinear_coefficients("beta", eq)
    assert_allclose(cz.shift_coefficient, -35.0 / 48.0 / eq.z0 ** 2,
                    rtol=1e-12)
    assert_allclose(cb.shift_coefficient, -0.25, rtol=1e-12)
    assert cz.alpha2 < 0.0 < cz.alpha3
    assert cb.alpha2 == 0.0
    with pytest.raises(InvalidParameterError):
        nonlinear_coefficients("x", eq)


def test_frequency_shift_is_softening(particle30):
    eq = plane_mode_frequencies(particle30)
    cz = nonlinear_coefficients("z", eq)
    w = frequency_shift(cz, 0.02 * eq.z0)
    assert w < cz.omega0
    assert_allclose(w / cz.omega0 - 1.0,
                    -35.0 / 48.0 * 0.02 ** 2, rtol=1e-12)


def test_frequency_shift_warns_outside_validity(particle30):
    eq = plane_mode_frequencies(particle30)
    cz = nonlinear_coefficients("z", eq)
    with pytest.warns(PerturbativeRangeWarning):
        frequency_shift(cz, 0.6 * eq.z0)


def test_oracle_agrees_with_perturbation_at_small_amplitude(particle30):
    eq = plane_mode_frequencies(particle30)
    for mode, amplitude in (("z", 0.01 * eq.z0), ("beta", 0.06)):
        c = nonlinear_coefficients(mode, eq)
        w_ode = ode_frequency_oracle(c, amplitude)
        shift_ode = w_ode / c.omega0 - 1.0
        shift_pt = c.shift_coefficient * amplitude ** 2
        assert abs(shift_ode - shift_pt) < 0.01 * abs(shift_pt)


def test_oracle_shows_next_order_bending(particle30):
    # at z_A / z0 = 0.05 the exact period deviates from first order by a
    # few percent of the shift -- the quadratic-cubic cancellation in the
    # leading coefficient amplifies the next order in the expansion
    eq = plane_mode_frequencies(particle30)
    cz = nonlinear_coefficients("z", eq)
    amplitude = 0.05 * eq.z0
    w_ode = ode_frequency_oracle(cz, amplitude)
    shift_ode = w_ode / cz.omega0 - 1.0
    shift_pt = cz.shift_coefficient * amplitude ** 2
    deviation = abs(shift_ode - shift_pt) / abs(shift_pt)
    assert 0.04 < deviation < 0.07


def test_oracle_amplitude_convention_is_even_in_alpha2():
    # the reported frequency is that of the fundamental at a given modal
    # amplitude, so flipping the sign of the quadratic term cannot matter
    w0 = 2.0 * math.pi * 50.0
    plus = NonlinearCoefficients(omega0=w0, alpha2=0.3 * w0 ** 2,
                                 alpha3=0.0)
    minus = NonlinearCoefficients(omega0=w0, alpha2=-0.3 * w0 ** 2,
                                  alpha3=0.0)
    assert_allclose(ode_frequency_oracle(plus, 0.3),
                    ode_frequency_oracle(minus, 0.3), rtol=1e-10)


def test_oracle_input_validation(particle30):
    eq = plane_mode_frequencies(particle30)
    cz = nonlinear_coefficients("z", eq)
    with pytest.raises(InvalidParameterError):
        ode_frequency_oracle(cz, 0.0)
    with pytest.raises(InvalidParameterError):
        ode_frequency_oracle(cz, eq.z0)  # far outside the soft regime
    with pytest.raises(InvalidParameterError):
        NonlinearCoefficients(omega0=0.0, alpha2=0.0, alpha3=0.0)


# ------------------------------------------------------------------
# ringdown synthesis
# ------------------------------------------------------------------

def test_ringdown_envelope_and_chirp(particle30):
    eq = plane_mode_frequencies(particle30)
    cz = nonlinear_coefficients("z", eq)
    rec = synthesize_ringdown(eq.f_z, tau=50.0,
                              initial_amplitude=0.1 * eq.z0, coeffs=cz,
                              sample_rate=1024.0, duration=60.0)
    assert rec.kind == "waveform"
    n = rec.values.size
    early = np.abs(rec.values[: n // 10]).max()
    late = np.abs(rec.values[-n // 10:]).max()
    assert_allclose(late / early, math.exp(-54.0 / 50.0), rtol=0.05)

    # instantaneous frequency recovers toward f_z as the amplitude decays
    t, amp, freq = ringdown_frequency_trace(rec)
    good = np.isfinite(freq)
    design = np.column_stack([np.ones(good.sum()), amp[good] ** 2])
    coef, *_ = np.linalg.lstsq(design, freq[good], rcond=None)
    slope_true = eq.f_z * cz.shift_coefficient
    assert_allclose(coef[1], slope_true, rtol=5e-3)
    assert_allclose(coef[0], eq.f_z, rtol=1e-4)


def test_ringdown_constant_amplitude_when_tau_infinite(particle30):
    eq = plane_mode_frequencies(particle30)
    rec = synthesize_ringdown(eq.f_z, tau=math.inf, initial_amplitude=1.0,
                              coeffs=None, sample_rate=1024.0, duration=5.0)
    assert_allclose(np.abs(rec.values).max(), 1.0, rtol=1e-3)
    rms = np.sqrt((rec.values ** 2).mean())
    assert_allclose(rms, 1.0 / math.sqrt(2.0), rtol=1e-3)


def test_ringdown_seeded_noise_is_reproducible(particle30):
    eq = plane_mode_frequencies(particle30)
    kw = dict(frequency=eq.f_z, tau=30.0, initial_amplitude=1.0,
              coeffs=None, sample_rate=4000.0, duration=2.0,
              noise_level=0.01, seed=7)
    a = synthesize_ringdown(**kw)
    b = synthesize_ringdown(**kw)
    assert np.array_equal(a.values, b.values)


def test_ringdown_synthesis_validation(particle30):
    eq = plane_mode_frequencies(particle30)
    with pytest.raises(InvalidParameterError):
        synthesize_ringdown(eq.f_z, tau=30.0, initial_amplitude=1.0,
                            coeffs=None, sample_rate=100.0, duration=2.0)
    with pytest.raises(InvalidParameterError):
        synthesize_ringdown(eq.f_z, tau=-1.0, initial_amplitude=1.0,
                            coeffs=None, sample_rate=4000.0, duration=2.0)
