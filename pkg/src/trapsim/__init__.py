"""Simulation and analysis toolkit for a magnetic microsphere levitated
above a superconducting well.

Submodules
----------
``core``
    shared domain types (particle, trap, configuration, environment),
    physical constants and the error hierarchy.
``image_plane``
    closed-form equilibrium and stiff-mode results in the infinite-plane
    (image method) limit.
``magnetostatics``
    boundary-integral solver for the finite cylindrical well and the full
    5-coordinate potential energy.
``dynamics``
    equilibrium search, mode spectra, tilt sweeps, anharmonic frequency
    shifts and ringdown synthesis.
``dissipation``
    gas, eddy-current and hysteresis damping channels, thermomolecular
    pressure correction, damping-versus-pressure fitting.
``noise``
    PSD estimation, resonance and ringdown fitting, torque calibration
    and sensitivity reports.
``config`` / ``cli``
    scenario-file parsing and the ``trapsim`` command-line tool.
"""

from .core import (
    CONSTANTS,
    GAS_MASSES,
    MBAR,
    Configuration,
    ConvergenceError,
    DataFormatError,
    DegenerateTrapError,
    DomainError,
    Environment,
    FitError,
    IntegratorAccuracyError,
    InvalidParameterError,
    InvalidTableError,
    MagnetParticle,
    NumericalDifferentiationError,
    PerturbativeRangeWarning,
    PhysicalConstants,
    SolverFailureError,
    TrapSystem,
    TrapsimError,
    UnstableEquilibriumError,
    ValidityWarning,
    derive_particle,
)

__version__ = "0.1.0"

__all__ = [
    "CONSTANTS",
    "GAS_MASSES",
    "MBAR",
    "Configuration",
    "ConvergenceError",
    "DataFormatError",
    "DegenerateTrapError",
    "DomainError",
    "Environment",
    "FitError",
    "IntegratorAccuracyError",
    "InvalidParameterError",
    "InvalidTableError",
    "MagnetParticle",
    "NumericalDifferentiationError",
    "PerturbativeRangeWarning",
    "PhysicalConstants",
    "SolverFailureError",
    "TrapSystem",
    "TrapsimError",
    "UnstableEquilibriumError",
    "ValidityWarning",
    "derive_particle",
    "__version__",
]
