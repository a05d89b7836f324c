"""Equilibria, rigid-body modes, tilt sweeps and anharmonic shifts.

The five generalized coordinates are (x, y, z, beta, alpha): centre of
mass plus the polar (out-of-plane) and azimuthal (in-plane) angles of
the magnetic moment.  Spin about the moment axis is a free rotation and
is not tracked.  Mode analysis solves the generalized eigenproblem
K v = omega^2 M v with K the finite-difference Hessian of the full
potential and M = diag(m, m, m, I, I); a uniform sphere carries the same
moment of inertia I = (2/5) m a^2 for both angular coordinates.

For an untilted trap the azimuthal angle is marginal (the trap is a body
of revolution), so one eigenvalue sits at numerical zero; it is clamped
and flagged rather than reported as a spurious frequency.
"""

from __future__ import annotations

import dataclasses
import io
import math
import warnings

import numpy as np
from scipy import integrate, linalg, optimize

from .core import (
    CONSTANTS,
    Configuration,
    ConvergenceError,
    DomainError,
    IntegratorAccuracyError,
    InvalidParameterError,
    NumericalDifferentiationError,
    PerturbativeRangeWarning,
    PhysicalConstants,
    TrapSystem,
    UnstableEquilibriumError,
    atomic_write_text,
)
from .image_plane import PlaneEquilibrium, equilibrium_height
from .magnetostatics import PanelSolver, full_potential, trap_solver
from .noise import RingdownRecord

__all__ = [
    "COORD_LABELS",
    "ModeSpectrum",
    "TiltPoint",
    "NonlinearCoefficients",
    "find_equilibrium",
    "mode_spectrum",
    "generalized_modes",
    "tilt_sweep",
    "write_sweep_csv",
    "nonlinear_coefficients",
    "frequency_shift",
    "ode_frequency_oracle",
    "synthesize_ringdown",
    "plane_initial_guess",
]

COORD_LABELS = ("x", "y", "z", "beta", "alpha")
_CSV_LABELS = ("x", "y", "z", "β", "α")

MAX_SWEEP_TILT = math.radians(10.0)

# eigenvalues within this fraction of the largest are treated as the
# marginal azimuthal direction, not as real restoring forces
MARGINAL_EIGENVALUE_FRACTION = 1e-6


# --------------------------------------------------------------------------
# potential plumbing
# --------------------------------------------------------------------------

def _coords_of(config: Configuration) -> np.ndarray:
    return np.array([config.x, config.y, config.z, config.beta, config.alpha])


def _config_of(coords: np.ndarray) -> Configuration:
    x, y, z, beta, alpha = (float(v) for v in coords)
    return Configuration(x=x, y=y, z=z, beta=beta, alpha=alpha)


class _ScaledPotential:
    """Potential as a function of scaled coordinates.

    Lengths are measured in units of the image-method levitation height,
    angles in radians, so one scaled unit means roughly comparable energy
    change in every direction.  Out-of-domain configurations evaluate to
    +inf, which the simplex search treats as an ordinary bad point.
    """

    def __init__(self, trap: TrapSystem, solver: PanelSolver,
                 constants: PhysicalConstants) -> None:
        self.trap = trap
        self.solver = solver
        self.constants = constants
        z0 = equilibrium_height(trap.particle, constants)
        self.scales = np.array([z0, z0, z0, 1.0, 1.0])
        particle = trap.particle
        self.energy_scale = particle.mass * constants.g * z0
        self.evaluations = 0

    def unscale(self, s: np.ndarray) -> np.ndarray:
        return s * self.scales

    def scale(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=float) / self.scales

    def __call__(self, s: np.ndarray) -> float:
        self.evaluations += 1
        try:
            config = _config_of(s * self.scales)
            return full_potential(self.trap, config, self.constants,
                                  solver=self.solver)
        except (DomainError, InvalidParameterError):
            return math.inf


# --------------------------------------------------------------------------
# equilibrium search
# --------------------------------------------------------------------------

def plane_initial_guess(trap: TrapSystem,
                        constants: PhysicalConstants = CONSTANTS
                        ) -> Configuration:
    """Image-method starting point: on axis at the analytic height, moment
    in plane and perpendicular to the lean direction."""
    z0 = equilibrium_height(trap.particle, constants)
    return Configuration(x=0.0, y=0.0, z=z0, beta=0.0, alpha=0.5 * math.pi)


def _polish_sweeps(potential: _ScaledPotential, s: np.ndarray,
                   steps=(1e-3, 3e-4, 1e-4)) -> np.ndarray:
    """Coordinate-wise quadratic refinement of a near-minimum point."""
    s = s.copy()
    for h in steps:
        for i in range(5):
            u0 = potential(s)
            sp, sm = s.copy(), s.copy()
            sp[i] += h
            sm[i] -= h
            up, um = potential(sp), potential(sm)
            if not (math.isfinite(up) and math.isfinite(um)):
                continue
            denom = up - 2.0 * u0 + um
            if denom <= 0.0:
                continue        # flat or concave along i (marginal direction)
            delta = 0.5 * h * (um - up) / denom
            s[i] += float(np.clip(delta, -h, h))
    return s


def _scaled_gradient(potential: _ScaledPotential, s: np.ndarray,
                     h: float = 1e-5) -> np.ndarray:
    grad = np.empty(5)
    for i in range(5):
        sp, sm = s.copy(), s.copy()
        sp[i] += h
        sm[i] -= h
        grad[i] = (potential(sp) - potential(sm)) / (2.0 * h)
    return grad


def find_equilibrium(trap: TrapSystem,
                     initial: Configuration | None = None,
                     solver: PanelSolver | None = None,
                     resolution: int = 2000,
                     constants: PhysicalConstants = CONSTANTS,
                     gradient_tolerance: float = 3e-4,
                     max_iterations: int = 4000) -> Configuration:
    """Locate a stable equilibrium of the full 5-coordinate potential.

    Derivative-free simplex descent in scaled coordinates followed by
    coordinate-wise quadratic polish.  Convergence is accepted when the
    scaled finite-difference gradient norm falls below
    ``gradient_tolerance`` times the characteristic energy m g z0;
    a distinctly negative diagonal curvature raises
    :class:`UnstableEquilibriumError` (a cross-direction saddle is caught
    later by :func:`mode_spectrum`).
    """
    if solver is None:
        solver = trap_solver(trap, resolution)
    if initial is None:
        initial = plane_initial_guess(trap, constants)
    potential = _ScaledPotential(trap, solver, constants)
    s = potential.scale(_coords_of(initial))
    if not math.isfinite(potential(s)):
        raise DomainError("initial configuration is outside the well")

    gradient_norm = math.inf
    for _attempt in range(2):
        result = optimize.minimize(
            potential, s, method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-9 * potential.energy_scale,
                     "maxiter": max_iterations, "maxfev": max_iterations,
                     "adaptive": True})
        s = _polish_sweeps(potential, result.x)
        gradient_norm = float(np.max(np.abs(_scaled_gradient(potential, s))))
        if gradient_norm < gradient_tolerance * potential.energy_scale:
            break
    if not gradient_norm < gradient_tolerance * potential.energy_scale:
        raise ConvergenceError(
            f"equilibrium search stalled: scaled gradient norm "
            f"{gradient_norm:.3e} J exceeds tolerance "
            f"{gradient_tolerance * potential.energy_scale:.3e} J after "
            f"{potential.evaluations} evaluations "
            f"(last point {potential.unscale(s)})")

    # cheap saddle guard along the coordinate axes
    h = 1e-3
    u0 = potential(s)
    curvatures = np.empty(5)
    for i in range(5):
        sp, sm = s.copy(), s.copy()
        sp[i] += h
        sm[i] -= h
        curvatures[i] = potential(sp) + potential(sm) - 2.0 * u0
    scale = float(np.max(np.abs(curvatures)))
    if np.any(curvatures < -MARGINAL_EIGENVALUE_FRACTION * scale):
        i = int(np.argmin(curvatures))
        raise UnstableEquilibriumError(
            f"negative curvature along {COORD_LABELS[i]} at "
            f"{potential.unscale(s)}: not a minimum")
    coords = potential.unscale(s)
    # wrap the free angles into (-pi, pi]; the optimizer can wander off by
    # whole turns along the initially-flat azimuth
    coords[3] = math.atan2(math.sin(coords[3]), math.cos(coords[3]))
    coords[4] = math.atan2(math.sin(coords[4]), math.cos(coords[4]))
    return _config_of(coords)


# --------------------------------------------------------------------------
# mode spectrum
# --------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Labeled small-oscillation frequencies about an equilibrium.

    Frequencies are sorted ascending; ``labels`` assigns each mode the
    coordinate dominating its mass-weighted eigenvector, bijectively.
    ``marginal`` flags eigenvalues clamped to zero (the free azimuthal
    rotation of an untilted trap).
    """

    equilibrium: Configuration
    frequencies: np.ndarray         # [Hz], ascending
    labels: tuple[str, ...]
    eigenvectors: np.ndarray        # columns, generalized-coordinate space
    mass_matrix: np.ndarray
    marginal: tuple[bool, ...]

    def frequency(self, label: str) -> float:
        if label not in COORD_LABELS:
            raise InvalidParameterError(f"unknown mode label {label!r}")
        return float(self.frequencies[self.labels.index(label)])


def generalized_modes(stiffness: np.ndarray, mass: np.ndarray,
                      equilibrium: Configuration | None = None
                      ) -> ModeSpectrum:
    """Solve K v = omega^2 M v, clamp the marginal direction, label modes.

    Split out from :func:`mode_spectrum` so the eigensolution/labeling
    path can be exercised on analytic matrices.
    """
    stiffness = np.asarray(stiffness, dtype=float)
    mass = np.asarray(mass, dtype=float)
    eigenvalues, vectors = linalg.eigh(stiffness, mass)
    largest = float(np.max(np.abs(eigenvalues)))
    if largest == 0.0:
        raise InvalidParameterError("stiffness matrix is identically zero")
    clamp = MARGINAL_EIGENVALUE_FRACTION * largest
    marginal = np.abs(eigenvalues) < clamp
    if np.any(eigenvalues < -clamp):
        bad = float(np.min(eigenvalues))
        raise UnstableEquilibriumError(
            f"negative stiffness eigenvalue {bad:.4e} (|max| {largest:.4e}): "
            "the configuration is a saddle, not a minimum")
    omega2 = np.where(marginal, 0.0, np.maximum(eigenvalues, 0.0))
    frequencies = np.sqrt(omega2) / (2.0 * math.pi)
    # mass-weighted energy share of each coordinate in each mode
    weights = mass.diagonal()[:, None] * vectors ** 2
    rows, cols = optimize.linear_sum_assignment(-weights.T)
    labels = [""] * 5
    for mode_index, coord_index in zip(rows, cols):
        labels[mode_index] = COORD_LABELS[coord_index]
    return ModeSpectrum(equilibrium=equilibrium, frequencies=frequencies,
                        labels=tuple(labels), eigenvectors=vectors,
                        mass_matrix=mass, marginal=tuple(bool(f) for f in marginal))


def _hessian(potential: _ScaledPotential, s: np.ndarray,
             step_length: float, step_angle: float) -> np.ndarray:
    """Richardson-refined central-difference Hessian in physical units."""
    h = np.array([step_length] * 3 + [step_angle] * 2)

    def shifted(*pairs) -> float:
        sq = s.copy()
        for index, multiple in pairs:
            sq[index] += multiple * h[index]
        value = potential(sq)
        if not math.isfinite(value):
            raise DomainError(
                "Hessian stencil left the well; reduce the step size")
        return value

    u0 = shifted()
    k_h = np.empty((5, 5))
    k_2h = np.empty((5, 5))
    for i in range(5):
        k_h[i, i] = (shifted((i, 1)) + shifted((i, -1)) - 2.0 * u0) / h[i] ** 2
        k_2h[i, i] = (shifted((i, 2)) + shifted((i, -2)) - 2.0 * u0) \
            / (2.0 * h[i]) ** 2
        for j in range(i + 1, 5):
            def cross(m: int) -> float:
                return (shifted((i, m), (j, m)) - shifted((i, m), (j, -m))
                        - shifted((i, -m), (j, m)) + shifted((i, -m), (j, -m))
                        ) / (4.0 * (m * h[i]) * (m * h[j]))
            k_h[i, j] = k_h[j, i] = cross(1)
            k_2h[i, j] = k_2h[j, i] = cross(2)
    hessian = (4.0 * k_h - k_2h) / 3.0

    # step-consistency guard: the Richardson correction must be a small
    # fraction of any entry that carries real stiffness
    significant = np.abs(hessian) > 1e-3 * np.max(np.abs(hessian))
    mismatch = np.abs(k_h - hessian)
    bad = significant & (mismatch > 0.25 * np.abs(hessian))
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise NumericalDifferentiationError(
            f"finite-difference Hessian entry ({COORD_LABELS[i]}, "
            f"{COORD_LABELS[j]}) is step-dependent: value {hessian[i, j]:.4e}"
            f", half-step estimate differs by {mismatch[i, j]:.1e}")
    # convert from scaled to physical coordinates
    return hessian / np.outer(potential.scales, potential.scales)


def mode_spectrum(trap: TrapSystem, equilibrium: Configuration,
                  solver: PanelSolver | None = None,
                  resolution: int = 2000,
                  constants: PhysicalConstants = CONSTANTS,
                  step_length: float = 1e-3,
                  step_angle: float = 1e-2) -> ModeSpectrum:
    """Small-oscillation spectrum about an equilibrium configuration.

    ``step_length`` is in units of the image-method height, ``step_angle``
    in radians; both feed a Richardson-refined central-difference Hessian
    of the full potential, which then enters the generalized eigenproblem
    with the rigid-sphere mass matrix.
    """
    if solver is None:
        solver = trap_solver(trap, resolution)
    potential = _ScaledPotential(trap, solver, constants)
    s = potential.scale(_coords_of(equilibrium))
    stiffness = _hessian(potential, s, step_length, step_angle)
    particle = trap.particle
    mass = np.diag([particle.mass] * 3 + [particle.inertia] * 2)
    return generalized_modes(stiffness, mass, equilibrium)


# --------------------------------------------------------------------------
# tilt sweep
# --------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class TiltPoint:
    """One sweep entry: tilt angle [rad], its equilibrium and spectrum."""

    tilt: float
    equilibrium: Configuration
    spectrum: ModeSpectrum


def tilt_sweep(trap: TrapSystem, tilt_values,
               solver: PanelSolver | None = None,
               resolution: int = 2000,
               constants: PhysicalConstants = CONSTANTS) -> list[TiltPoint]:
    """Equilibria and spectra over a sequence of tilt angles [rad].

    The mesh and factored system do not depend on tilt (gravity is tilted
    instead of the geometry), so one solver serves every angle.  Each
    angle warm-starts from the previous equilibrium; on a convergence or
    stability failure the angle is retried once from the untilted guess
    before the error is re-raised tagged with the failing angle.
    """
    tilts = [float(t) for t in tilt_values]
    if not tilts:
        raise InvalidParameterError("tilt_values is empty")
    for t in tilts:
        if not 0.0 <= t <= MAX_SWEEP_TILT + 1e-12:
            raise InvalidParameterError(
                f"tilt {math.degrees(t):.3g} deg outside the supported "
                f"0-10 degree sweep range")
    if solver is None:
        solver = trap_solver(trap, resolution)
    points: list[TiltPoint] = []
    guess = plane_initial_guess(trap, constants)
    for t in tilts:
        tilted = dataclasses.replace(trap, tilt=t)
        try:
            try:
                equilibrium = find_equilibrium(tilted, guess, solver=solver,
                                               constants=constants)
                spectrum = mode_spectrum(tilted, equilibrium, solver=solver,
                                         constants=constants)
            except (ConvergenceError, UnstableEquilibriumError):
                # a fresh start can land on a slightly different equilibrium
                # where the soft lateral modes clear the discretization ripple
                equilibrium = find_equilibrium(
                    tilted, plane_initial_guess(trap, constants),
                    solver=solver, constants=constants)
                spectrum = mode_spectrum(tilted, equilibrium, solver=solver,
                                         constants=constants)
        except (ConvergenceError, UnstableEquilibriumError,
                NumericalDifferentiationError) as exc:
            raise type(exc)(
                f"tilt sweep failed at {math.degrees(t):.4g} deg: {exc}"
                ) from exc
        points.append(TiltPoint(tilt=t, equilibrium=equilibrium,
                                spectrum=spectrum))
        guess = equilibrium
    return points


SWEEP_CSV_HEADER = "θ_deg,x0,y0,z0,β0,α0,f_x,f_y,f_z,f_β,f_α"


def write_sweep_csv(path: str, points: list[TiltPoint]) -> None:
    """Write a tilt sweep as CSV, one row per angle (UTF-8, atomic)."""
    buf = io.StringIO()
    buf.write(SWEEP_CSV_HEADER + "\n")
    for p in points:
        eq = p.equilibrium
        row = [math.degrees(p.tilt), eq.x, eq.y, eq.z, eq.beta, eq.alpha]
        row += [p.spectrum.frequency(label) for label in COORD_LABELS]
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    atomic_write_text(path, buf.getvalue())


# --------------------------------------------------------------------------
# anharmonic frequency shifts
# --------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class NonlinearCoefficients:
    """Coefficients of x'' + omega0^2 x + alpha2 x^2 + alpha3 x^3 = 0.

    ``shift_coefficient`` is the relative frequency change per squared
    modal amplitude; both trap modes are softening (negative).
    """

    omega0: float               # [rad/s]
    alpha2: float               # [1/(m s^2)] for z, 0 for beta
    alpha3: float               # [1/(m^2 s^2)] for z, [1/s^2] for beta
    mode: str = "custom"

    def __post_init__(self) -> None:
        if not self.omega0 > 0.0:
            raise InvalidParameterError("omega0 must be > 0")

    @property
    def shift_coefficient(self) -> float:
        w2 = self.omega0 ** 2
        return 3.0 * self.alpha3 / (8.0 * w2) \
            - 5.0 * self.alpha2 ** 2 / (12.0 * w2 ** 2)


def nonlinear_coefficients(mode: str,
                           plane_equilibrium: PlaneEquilibrium
                           ) -> NonlinearCoefficients:
    """Anharmonic coefficients of the two plane-limit trap modes.

    From the Taylor expansion of the image potential about equilibrium:
    the vertical mode carries alpha2 = -(5/2) omega_z^2 / z0 and
    alpha3 = 5 omega_z^2 / z0^2 (net relative shift -35/48 per
    (z_A/z0)^2); the tip mode is symmetric, alpha2 = 0 and
    alpha3 = -(2/3) omega_beta^2 (net shift -beta_A^2/4).
    """
    eq = plane_equilibrium
    if mode == "z":
        w = eq.omega_z
        return NonlinearCoefficients(
            omega0=w, alpha2=-2.5 * w ** 2 / eq.z0,
            alpha3=5.0 * w ** 2 / eq.z0 ** 2, mode="z")
    if mode == "beta":
        w = eq.omega_beta
        return NonlinearCoefficients(
            omega0=w, alpha2=0.0, alpha3=-(2.0 / 3.0) * w ** 2, mode="beta")
    raise InvalidParameterError(f"mode must be 'z' or 'beta', got {mode!r}")


PERTURBATIVE_SHIFT_LIMIT = 0.20


def frequency_shift(coeffs: NonlinearCoefficients,
                    amplitude: float) -> float:
    """Amplitude-dependent angular frequency of the anharmonic mode.

    First-order secular perturbation theory:
    omega = omega0 [1 + (3 alpha3 / 8 omega0^2
                         - 5 alpha2^2 / 12 omega0^4) x_A^2].
    Beyond a 20% relative shift the expansion is unreliable; the value is
    still returned but a :class:`PerturbativeRangeWarning` is issued.
    """
    if amplitude < 0.0:
        raise InvalidParameterError("amplitude must be >= 0")
    relative = coeffs.shift_coefficient * amplitude ** 2
    if abs(relative) > PERTURBATIVE_SHIFT_LIMIT:
        warnings.warn(
            f"relative shift {relative:.3g} exceeds the perturbative "
            f"validity bound {PERTURBATIVE_SHIFT_LIMIT}",
            PerturbativeRangeWarning, stacklevel=2)
    return coeffs.omega0 * (1.0 + relative)


def _release_displacement(w2: float, a2: float, a3: float,
                          amplitude: float) -> float:
    """Turning point whose half peak-to-peak excursion is ``amplitude``.

    ``amplitude`` follows the modal convention of :func:`frequency_shift`
    (the coefficient of the fundamental cosine).  A quadratic term makes
    the orbit asymmetric, so releasing from rest at x = amplitude would
    under- or over-shoot the modal amplitude at first order in
    a2*amplitude/w2; half the peak-to-peak excursion agrees with the
    fundamental through second order and exactly when a2 = 0.
    """
    if a2 == 0.0:
        return amplitude

    def potential(x: float) -> float:
        return 0.5 * w2 * x * x + a2 * x ** 3 / 3.0 + a3 * x ** 4 / 4.0

    def opposite_turning(r: float) -> float:
        u_r = potential(r)
        lo = -r
        while potential(lo) < u_r:
            lo *= 1.25
            if abs(lo) > 16.0 * r:
                raise IntegratorAccuracyError(
                    "mode potential is not confining at this amplitude")
        return optimize.brentq(lambda x: potential(x) - u_r,
                               lo, -1e-9 * r, xtol=1e-15 * r)

    def excess(r: float) -> float:
        return 0.5 * (r - opposite_turning(r)) - amplitude

    lo, hi = 0.5 * amplitude, 1.5 * amplitude
    while excess(lo) > 0.0:
        lo *= 0.5
    while excess(hi) < 0.0:
        hi *= 1.5
    return optimize.brentq(excess, lo, hi, xtol=1e-14 * amplitude)


def ode_frequency_oracle(coeffs: NonlinearCoefficients, amplitude: float,
                         cycles: int = 50) -> float:
    """Oscillation frequency by direct integration of the mode equation.

    Starts from rest at the turning point whose half peak-to-peak
    excursion equals ``amplitude`` (for a symmetric potential that is
    simply x = amplitude), integrates with a high-order explicit scheme,
    and times rising zero crossings over at least ``cycles`` periods.
    Serves as the independent check on :func:`frequency_shift`; it
    shares no perturbative step with it.
    """
    if amplitude <= 0.0:
        raise InvalidParameterError("amplitude must be > 0")
    if cycles < 5:
        raise InvalidParameterError("need at least 5 cycles")
    relative = coeffs.shift_coefficient * amplitude ** 2
    if abs(relative) > 2.0 * PERTURBATIVE_SHIFT_LIMIT:
        raise InvalidParameterError(
            f"estimated shift {relative:.3g} is far outside the regime this "
            "oracle is meant to validate")
    w2, a2, a3 = coeffs.omega0 ** 2, coeffs.alpha2, coeffs.alpha3

    def rhs(_t, y):
        x, v = y
        return (v, -(w2 * x + a2 * x * x + a3 * x ** 3))

    def energy(y):
        x, v = y
        return 0.5 * v * v + 0.5 * w2 * x * x + a2 * x ** 3 / 3.0 \
            + a3 * x ** 4 / 4.0

    def rising(_t, y):
        return y[0]
    rising.direction = 1.0

    period_estimate = 2.0 * math.pi / (coeffs.omega0 * (1.0 + relative))
    t_end = (cycles + 3) * period_estimate
    y0 = np.array([_release_displacement(w2, a2, a3, amplitude), 0.0])
    solution = integrate.solve_ivp(
        rhs, (0.0, t_end), y0, method="DOP853", events=rising,
        rtol=1e-12, atol=1e-12 * amplitude, dense_output=False)
    if not solution.success:
        raise IntegratorAccuracyError(
            f"mode integration failed: {solution.message}")
    drift = abs(energy(solution.y[:, -1]) - energy(y0)) / abs(energy(y0))
    if drift > 1e-6:
        raise IntegratorAccuracyError(
            f"relative energy drift {drift:.3e} exceeds 1e-6 over "
            f"{cycles} cycles")
    crossings = solution.t_events[0]
    if crossings.size < cycles:
        raise IntegratorAccuracyError(
            f"only {crossings.size} zero crossings found, expected "
            f">= {cycles}")
    return 2.0 * math.pi * (crossings.size - 1) \
        / float(crossings[-1] - crossings[0])


# --------------------------------------------------------------------------
# ringdown synthesis
# --------------------------------------------------------------------------

def synthesize_ringdown(frequency: float, tau: float,
                        initial_amplitude: float,
                        coeffs: NonlinearCoefficients | None,
                        sample_rate: float, duration: float,
                        noise_level: float = 0.0,
                        seed: int | None = None) -> RingdownRecord:
    """Synthetic ringdown waveform with amplitude-dependent frequency.

    The envelope decays as exp(-t/tau) (``tau = inf`` gives constant
    amplitude); the instantaneous frequency follows the anharmonic shift
    of the decaying amplitude when ``coeffs`` is given, and additive
    white Gaussian noise of standard deviation ``noise_level`` is drawn
    from a seeded generator, so records are reproducible.
    """
    if not frequency > 0.0:
        raise InvalidParameterError("frequency must be > 0")
    if not tau > 0.0:
        raise InvalidParameterError("tau must be > 0 (inf allowed)")
    if not sample_rate > 4.0 * frequency:
        raise InvalidParameterError(
            f"sample rate {sample_rate:.4g} Hz undersamples a "
            f"{frequency:.4g} Hz mode (need > 4x)")
    if not duration > 0.0:
        raise InvalidParameterError("duration must be > 0")
    if noise_level < 0.0:
        raise InvalidParameterError("noise_level must be >= 0")
    n = int(round(duration * sample_rate))
    if n < 16:
        raise InvalidParameterError("duration too short for a usable record")
    t = np.arange(n) / sample_rate
    envelope = initial_amplitude * (np.exp(-t / tau) if math.isfinite(tau)
                                    else np.ones_like(t))
    omega = 2.0 * math.pi * frequency
    if coeffs is not None:
        omega_inst = omega * (1.0 + coeffs.shift_coefficient * envelope ** 2)
    else:
        omega_inst = np.full_like(t, omega)
    phase = integrate.cumulative_trapezoid(omega_inst, t, initial=0.0)
    values = envelope * np.cos(phase)
    if noise_level > 0.0:
        rng = np.random.default_rng(seed)
        values = values + noise_level * rng.standard_normal(n)
    return RingdownRecord(times=t, values=values, sample_rate=sample_rate,
                          kind="waveform")
