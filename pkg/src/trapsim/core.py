"""Shared domain types, physical constants and unit conventions.

Everything in the library is strict SI (m, kg, s, K, Pa, T, rad).  The
command line and the config-file reader accept engineering units (um, mm,
mbar, degrees) and convert at that boundary; nothing below this module
ever sees a non-SI number.

The central objects are:

``MagnetParticle``
    a uniformly magnetised, rigid sphere; derived quantities (volume,
    mass, moment of inertia, dipole moment) are exposed as properties so
    the invariants ``m = rho V`` and ``I = (2/5) m a^2`` hold exactly.
``TrapSystem``
    a cylindrical well machined into a superconducting block, with an
    optional small tilt of the whole assembly against gravity.
``Configuration``
    the rigid-body state of the sphere: position of the centre plus the
    orientation of the magnetisation axis.  The spin angle about the
    magnetisation axis is stored for completeness but never enters any
    energy: the sphere is inertially symmetric about that axis.
``Environment``
    cryostat-side thermodynamic state (cold/warm temperatures, warm-side
    gauge pressure, gas species) used by the dissipation models.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass

MBAR = 100.0  # Pa per millibar

#: molecular masses [kg] for the gas species accepted in config files
GAS_MASSES = {
    "hydrogen": 3.3476e-27,   # H2
    "helium": 6.6464731e-27,
    "neon": 3.3509177e-26,
    "nitrogen": 4.6517342e-26,  # N2
    "argon": 6.6335209e-26,
}


# --------------------------------------------------------------------------
# errors
# --------------------------------------------------------------------------

class TrapsimError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(TrapsimError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(TrapsimError):
    """An evaluation point lies outside the valid spatial/physical domain."""


class DegenerateTrapError(TrapsimError):
    """The configured system has no levitating equilibrium (e.g. mu = 0)."""


class SolverFailureError(TrapsimError):
    """A linear boundary solve failed or its conditioning is untrustworthy."""


class ConvergenceError(TrapsimError):
    """An iterative search exhausted its budget without meeting tolerance."""


class UnstableEquilibriumError(TrapsimError):
    """A stationary point has a descent direction (negative stiffness)."""


class NumericalDifferentiationError(TrapsimError):
    """Finite-difference derivatives disagree between step sizes."""


class IntegratorAccuracyError(TrapsimError):
    """Energy drift of the reference integrator exceeded its bound."""


class InvalidTableError(TrapsimError, ValueError):
    """A user-supplied lookup table is malformed (wrong shape, not monotone)."""


class FitError(TrapsimError):
    """A least-squares fit failed, did not converge, or is rank deficient."""


class DataFormatError(TrapsimError):
    """An imported file does not match its declared schema."""


class ValidityWarning(UserWarning):
    """A model is being evaluated outside its nominal validity range."""


class PerturbativeRangeWarning(ValidityWarning):
    """Amplitude beyond the perturbative window; result is indicative only."""


# --------------------------------------------------------------------------
# constants
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA constants plus local gravity.

    ``g`` defaults to 9.81 m/s^2; all four values can be overridden through
    the ``[constants]`` section of a config file (useful for checking the
    sensitivity of derived quantities to the adopted gravity value).
    """

    mu0: float = 1.25663706212e-06  # vacuum permeability [T m / A]
    g: float = 9.81                 # gravitational acceleration [m / s^2]
    kB: float = 1.380649e-23        # Boltzmann constant [J / K]
    hbar: float = 1.054571817e-34   # reduced Planck constant [J s]

    def __post_init__(self) -> None:
        for name in ("mu0", "g", "kB", "hbar"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise InvalidParameterError(
                    f"constant {name!r} must be positive and finite, got {value!r}")


CONSTANTS = PhysicalConstants()


def atomic_write_text(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename.

    Output files are either complete or absent; a crash mid-write never
    leaves a truncated file behind.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# particle
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MagnetParticle:
    """A hard ferromagnetic microsphere, uniformly magnetised.

    Parameters
    ----------
    radius : float
        Sphere radius a [m].
    density : float
        Mass density rho [kg/m^3].
    remanent_field : float
        Remanent magnetisation expressed as mu0*M [T].  The dipole moment
        follows as mu = (mu0*M / mu0) * V.
    conductivity : float, optional
        Electrical conductivity sigma [S/m], used by the eddy-current loss
        model.  Zero disables that channel.
    chi_imag : float, optional
        Imaginary part of the AC susceptibility (dimensionless), used by
        the hysteresis loss model.  Zero disables that channel.
    mu0 : float, optional
        Vacuum permeability used to convert ``remanent_field`` into a
        moment; pass ``constants.mu0`` when overriding constants.
    """

    radius: float
    density: float
    remanent_field: float
    conductivity: float = 0.0
    chi_imag: float = 0.0
    mu0: float = CONSTANTS.mu0

    def __post_init__(self) -> None:
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise InvalidParameterError(f"radius must be > 0, got {self.radius!r}")
        if not (self.density > 0.0 and math.isfinite(self.density)):
            raise InvalidParameterError(f"density must be > 0, got {self.density!r}")
        if self.remanent_field < 0.0 or not math.isfinite(self.remanent_field):
            raise InvalidParameterError(
                f"remanent_field (mu0*M) must be >= 0, got {self.remanent_field!r}")
        if self.conductivity < 0.0:
            raise InvalidParameterError("conductivity must be >= 0")
        if self.chi_imag < 0.0:
            raise InvalidParameterError("chi_imag must be >= 0")
        if not self.mu0 > 0.0:
            raise InvalidParameterError("mu0 must be > 0")

    @property
    def volume(self) -> float:
        """Sphere volume V = (4/3) pi a^3 [m^3]."""
        return (4.0 / 3.0) * math.pi * self.radius ** 3

    @property
    def mass(self) -> float:
        """Mass m = rho V [kg]."""
        return self.density * self.volume

    @property
    def inertia(self) -> float:
        """Moment of inertia of a uniform sphere, I = (2/5) m a^2 [kg m^2]."""
        return 0.4 * self.mass * self.radius ** 2

    @property
    def dipole_moment(self) -> float:
        """Magnetic moment mu = M V = (remanent_field / mu0) V [A m^2]."""
        return self.remanent_field / self.mu0 * self.volume


def derive_particle(radius: float,
                    density: float,
                    remanent_field: float,
                    conductivity: float = 0.0,
                    chi_imag: float = 0.0,
                    constants: PhysicalConstants = CONSTANTS) -> MagnetParticle:
    """Build a :class:`MagnetParticle` from primary material parameters."""
    return MagnetParticle(radius=radius, density=density,
                          remanent_field=remanent_field,
                          conductivity=conductivity, chi_imag=chi_imag,
                          mu0=constants.mu0)


# --------------------------------------------------------------------------
# trap, configuration, environment
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrapSystem:
    """Cylindrical well in a superconducting block, possibly tilted.

    Geometry is described in the frame of the block: the floor of the well
    is the z = 0 plane, the axis of the well is +z, the open end is at
    z = ``well_depth``.  Tilting the assembly is represented by rotating
    the gravity vector instead of the geometry: ``tilt`` is the angle
    between the well axis and the vertical, and ``tilt_axis`` is the
    horizontal direction toward which gravity leans, so for a positive
    tilt the sphere slides toward +``tilt_axis``.  Flipping the axis
    direction is equivalent to flipping the sign of the tilt.
    """

    well_radius: float
    well_depth: float
    particle: MagnetParticle
    tilt: float = 0.0                       # [rad], 0 <= tilt < pi/2
    tilt_axis: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self) -> None:
        if not (self.well_radius > 0.0 and math.isfinite(self.well_radius)):
            raise InvalidParameterError("well_radius must be > 0")
        if not (self.well_depth > 0.0 and math.isfinite(self.well_depth)):
            raise InvalidParameterError("well_depth must be > 0")
        if not (0.0 <= self.tilt < math.pi / 2.0):
            raise InvalidParameterError(
                f"tilt must lie in [0, pi/2), got {self.tilt!r} rad")
        ax, ay = self.tilt_axis
        norm = math.hypot(ax, ay)
        if norm == 0.0 or not math.isfinite(norm):
            raise InvalidParameterError("tilt_axis must be a nonzero 2-vector")
        object.__setattr__(self, "tilt_axis", (ax / norm, ay / norm))

    def gravity_direction(self) -> tuple[float, float, float]:
        """Unit vector of gravitational acceleration in the block frame."""
        s, c = math.sin(self.tilt), math.cos(self.tilt)
        ax, ay = self.tilt_axis
        return (s * ax, s * ay, -c)

    def gravitational_potential(self, x: float, y: float, z: float,
                                constants: PhysicalConstants = CONSTANTS) -> float:
        """-m g_vec . r; reduces to ``m g z`` for an untilted trap [J]."""
        dx, dy, dz = self.gravity_direction()
        return -self.particle.mass * constants.g * (dx * x + dy * y + dz * z)


@dataclass(frozen=True)
class Configuration:
    """Rigid-body state of the sphere inside the well.

    ``beta`` is the libration angle of the magnetic moment out of the
    horizontal plane (beta = 0: moment horizontal) and ``alpha`` the
    azimuth of its horizontal projection.  ``gamma``, the spin angle about
    the moment axis, is carried for completeness but is cyclic: no energy
    in this package depends on it and it never enters a stiffness matrix.
    """

    x: float
    y: float
    z: float
    beta: float = 0.0
    alpha: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if not (self.z > 0.0 and math.isfinite(self.z)):
            raise InvalidParameterError(f"height z must be > 0, got {self.z!r}")
        for name in ("x", "y", "beta", "alpha", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"coordinate {name} must be finite")

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def moment_direction(self) -> tuple[float, float, float]:
        """Unit vector along the magnetic moment."""
        cb = math.cos(self.beta)
        return (cb * math.cos(self.alpha), cb * math.sin(self.alpha),
                math.sin(self.beta))


@dataclass(frozen=True)
class Environment:
    """Thermodynamic state of the cryostat around the trap.

    The trap sits at ``temperature_cold`` while the pressure gauge reads
    ``pressure_warm`` at ``temperature_warm`` at the other end of a
    connecting tube of radius ``tube_radius``.  The tube radius is not
    used by the built-in low-pressure limit of the thermomolecular
    correction; it is recorded so a user-supplied correction table for a
    specific tube can be attached to the same environment.
    """

    temperature_cold: float = 4.2       # [K]
    temperature_warm: float = 293.0     # [K]
    pressure_warm: float = 0.0          # [Pa], gauge at the warm end
    gas_mass: float = GAS_MASSES["helium"]  # [kg]
    tube_radius: float = 0.0097         # [m]

    def __post_init__(self) -> None:
        if self.temperature_cold < 0.0:
            raise InvalidParameterError("temperature_cold must be >= 0")
        if not self.temperature_warm > 0.0:
            raise InvalidParameterError("temperature_warm must be > 0")
        if self.pressure_warm < 0.0:
            raise InvalidParameterError("pressure_warm must be >= 0")
        if not self.gas_mass > 0.0:
            raise InvalidParameterError("gas_mass must be > 0")
        if self.tube_radius < 0.0:
            raise InvalidParameterError("tube_radius must be >= 0")
