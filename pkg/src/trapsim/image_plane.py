"""Closed-form model of the sphere above an infinite superconducting plane.

For heights small compared with the well radius the floor of the well acts
as an infinite flux-expelling plane, and the boundary-value problem has the
classic mirror-image solution: a dipole mu at height z with libration angle
beta sees an image dipole with the in-plane moment component preserved and
the vertical component flipped.  Half the dipole-image interaction energy
plus the gravitational term gives

    U(z, beta) = mu0 mu^2 (1 + sin^2 beta) / (64 pi z^3) + m g z,

from which everything else here follows in closed form: the equilibrium
height, the vertical and librational spring constants and frequencies, and
the thermal amplitudes.  These expressions are the reference against which
the numerical boundary-element solver is validated, and they invert to an
estimate of the sphere radius from a measured frequency pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    CONSTANTS,
    DegenerateTrapError,
    DomainError,
    InvalidParameterError,
    MagnetParticle,
    PhysicalConstants,
)

__all__ = [
    "PlaneEquilibrium",
    "image_potential",
    "equilibrium_height",
    "plane_mode_frequencies",
    "spring_constants_fd",
    "radius_from_frequencies",
    "thermal_rms",
]


@dataclass(frozen=True)
class PlaneEquilibrium:
    """Equilibrium and small-oscillation parameters above an infinite plane."""

    z0: float           # equilibrium height of the sphere centre [m]
    k_z: float          # vertical spring constant [N/m]
    k_beta: float       # librational spring constant [N m / rad]
    omega_z: float      # vertical angular frequency [rad/s]
    omega_beta: float   # librational angular frequency [rad/s]

    @property
    def f_z(self) -> float:
        return self.omega_z / (2.0 * math.pi)

    @property
    def f_beta(self) -> float:
        return self.omega_beta / (2.0 * math.pi)


def image_potential(z: float, beta: float, particle: MagnetParticle,
                    constants: PhysicalConstants = CONSTANTS) -> float:
    """Total potential energy above an infinite plane [J].

    Parameters
    ----------
    z : float
        Height of the sphere centre above the plane [m]; must be > 0.
    beta : float
        Libration angle of the moment out of the horizontal [rad].
    """
    if not (z > 0.0 and math.isfinite(z)):
        raise DomainError(f"image potential requires z > 0, got {z!r}")
    mu = particle.dipole_moment
    c = constants.mu0 * mu * mu / (64.0 * math.pi)
    return c * (1.0 + math.sin(beta) ** 2) / z ** 3 \
        + particle.mass * constants.g * z


def equilibrium_height(particle: MagnetParticle,
                       constants: PhysicalConstants = CONSTANTS) -> float:
    """Levitation height z0 = (3 mu0 mu^2 / (64 pi m g))^(1/4) [m]."""
    mu = particle.dipole_moment
    if mu == 0.0:
        raise DegenerateTrapError(
            "unmagnetised sphere has no levitating equilibrium")
    return (3.0 * constants.mu0 * mu * mu
            / (64.0 * math.pi * particle.mass * constants.g)) ** 0.25


def plane_mode_frequencies(particle: MagnetParticle,
                           constants: PhysicalConstants = CONSTANTS
                           ) -> PlaneEquilibrium:
    """Closed-form equilibrium, spring constants and stiff-mode frequencies.

    The vertical stiffness is k_z = 4 m g / z0 (second z-derivative of the
    potential at equilibrium) and the librational stiffness is
    k_beta = (2/3) m g z0, giving

        omega_z    = sqrt(4 g / z0),
        omega_beta = sqrt(5 z0 g / (3 a^2)).

    Both identities k_z = m omega_z^2 and k_beta = I omega_beta^2 hold
    exactly by construction.
    """
    z0 = equilibrium_height(particle, constants)
    m = particle.mass
    g = constants.g
    k_z = 4.0 * m * g / z0
    k_beta = (2.0 / 3.0) * m * g * z0
    omega_z = math.sqrt(k_z / m)
    omega_beta = math.sqrt(k_beta / particle.inertia)
    return PlaneEquilibrium(z0=z0, k_z=k_z, k_beta=k_beta,
                            omega_z=omega_z, omega_beta=omega_beta)


def spring_constants_fd(particle: MagnetParticle,
                        constants: PhysicalConstants = CONSTANTS,
                        rel_step: float = 1.0e-4) -> tuple[float, float]:
    """Spring constants from central differences of :func:`image_potential`.

    Provided alongside the closed forms so the two routes can be compared;
    uses Richardson extrapolation over steps (h, 2h).
    """
    z0 = equilibrium_height(particle, constants)

    def d2(f, h):
        def estimate(step):
            return (f(step) - 2.0 * f(0.0) + f(-step)) / step ** 2
        return (4.0 * estimate(h) - estimate(2.0 * h)) / 3.0

    hz = rel_step * z0
    hb = rel_step  # angle scale: 1 rad
    k_z = d2(lambda u: image_potential(z0 + u, 0.0, particle, constants), hz)
    k_beta = d2(lambda b: image_potential(z0, b, particle, constants), hb)
    return k_z, k_beta


def radius_from_frequencies(omega_z: float, omega_beta: float,
                            constants: PhysicalConstants = CONSTANTS) -> float:
    """Sphere radius from the stiff-mode frequency pair [m].

    Eliminating z0 between the two closed-form frequencies gives

        a = sqrt(20/3) g / (omega_z omega_beta),

    independent of density and magnetisation.  Frequencies are angular
    [rad/s] and must be positive.
    """
    if not (omega_z > 0.0 and omega_beta > 0.0):
        raise DomainError("radius inversion requires positive frequencies")
    return math.sqrt(20.0 / 3.0) * constants.g / (omega_z * omega_beta)


def thermal_rms(temperature: float, spring_constant: float,
                constants: PhysicalConstants = CONSTANTS) -> float:
    """Equipartition rms amplitude sqrt(kB T / k) of a harmonic mode.

    Works for either a translational mode (k in N/m, result in m) or a
    librational mode (k in N m/rad, result in rad).
    """
    if temperature < 0.0:
        raise InvalidParameterError("temperature must be >= 0")
    if not (spring_constant > 0.0 and math.isfinite(spring_constant)):
        raise DomainError(
            f"thermal amplitude needs k > 0, got {spring_constant!r}")
    return math.sqrt(constants.kB * temperature / spring_constant)
