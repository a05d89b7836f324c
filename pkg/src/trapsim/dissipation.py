"""Damping channels and quality-factor accounting for the levitated sphere.

Channels covered:

* free-molecular gas drag on translation and rotation (valid when the
  mean free path is large compared with the sphere, i.e. at the mbar
  pressures and below relevant here);
* the thermomolecular relation between the warm-side gauge pressure and
  the pressure at the cold trap;
* eddy-current loss in the weakly conducting sphere, driven by the field
  ripple it sees while librating over its own induced sources;
* magnetic hysteresis loss parameterised by the imaginary part of the AC
  susceptibility;
* an explicit residual channel for whatever a measured intercept
  contains beyond the modelled physics.

Quality factors use the amplitude-decay convention Q = pi f tau, so the
energy decay rate is Gamma = omega / Q = 2 / tau.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    CONSTANTS,
    DataFormatError,
    Environment,
    FitError,
    InvalidParameterError,
    InvalidTableError,
    MagnetParticle,
    PhysicalConstants,
    ValidityWarning,
    atomic_write_text,
)

__all__ = [
    "DampingBudget",
    "DampingFit",
    "DAMPING_CSV_HEADER",
    "mean_thermal_velocity",
    "gas_damping",
    "thermomolecular_pressure",
    "eddy_current_q",
    "hysteresis_q",
    "hysteresis_chi_for_q",
    "q_from_ringdown",
    "damping_budget",
    "fit_damping_vs_pressure",
    "write_damping_csv",
    "load_damping_csv",
]

#: dimensionless prefactor of the translational free-molecular drag
_GAS_TRANSLATION = 0.5 * (1.0 + 8.0 / math.pi)
#: dimensionless prefactor of the rotational free-molecular drag
_GAS_ROTATION = 5.0 / math.pi


def mean_thermal_velocity(temperature: float, gas_mass: float,
                          constants: PhysicalConstants = CONSTANTS) -> float:
    """Mean molecular speed v_th = sqrt(8 kB T / (pi m_gas)) [m/s]."""
    if not temperature > 0.0:
        raise InvalidParameterError("temperature must be > 0")
    if not gas_mass > 0.0:
        raise InvalidParameterError("gas_mass must be > 0")
    return math.sqrt(8.0 * constants.kB * temperature / (math.pi * gas_mass))


def gas_damping(pressure: float, particle: MagnetParticle,
                thermal_velocity: float, kind: str = "translational") -> float:
    """Free-molecular amplitude damping rate 1/tau [1/s].

    Parameters
    ----------
    pressure : float
        Gas pressure at the particle [Pa]; >= 0.
    thermal_velocity : float
        Mean molecular speed of the surrounding gas [m/s].
    kind : {"translational", "rotational"}
        Selects the prefactor: (1/2)(1 + 8/pi) for centre-of-mass motion,
        5/pi for rotation.  Their ratio is (pi + 8)/10, independent of
        every other parameter.
    """
    if pressure < 0.0:
        raise InvalidParameterError("pressure must be >= 0")
    if not thermal_velocity > 0.0:
        raise InvalidParameterError("thermal_velocity must be > 0")
    if kind == "translational":
        prefactor = _GAS_TRANSLATION
    elif kind == "rotational":
        prefactor = _GAS_ROTATION
    else:
        raise InvalidParameterError(
            f"kind must be 'translational' or 'rotational', got {kind!r}")
    return prefactor * pressure / (
        particle.density * particle.radius * thermal_velocity)


def thermomolecular_pressure(env: Environment,
                             model: str = "low_pressure_limit",
                             table: np.ndarray | None = None) -> float:
    """Pressure at the cold trap inferred from the warm-side gauge [Pa].

    In the low-pressure (free-molecular) limit the two ends of the
    connecting tube satisfy P_c = P_w sqrt(T_c / T_w).  A measured
    correction for a specific tube can be supplied as a table of
    ``(P_w, P_c)`` pairs in Pa; it is interpolated monotonically in
    log-log space, with the low-pressure limit enforced as the asymptote
    below the lowest tabulated point and the last tabulated ratio held
    above the highest.
    """
    p_w = env.pressure_warm
    ratio = math.sqrt(env.temperature_cold / env.temperature_warm)
    if model == "low_pressure_limit":
        return p_w * ratio
    if model != "user_table":
        raise InvalidParameterError(
            f"model must be 'low_pressure_limit' or 'user_table', got {model!r}")

    tab = np.asarray(table, dtype=float) if table is not None else None
    if tab is None or tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 2:
        raise InvalidTableError(
            "user_table model needs an (n, 2) array of (P_warm, P_cold) pairs "
            "with n >= 2")
    if np.any(tab <= 0.0) or not np.all(np.isfinite(tab)):
        raise InvalidTableError("table pressures must be positive and finite")
    if np.any(np.diff(tab[:, 0]) <= 0.0) or np.any(np.diff(tab[:, 1]) <= 0.0):
        raise InvalidTableError(
            "table must be strictly increasing in both columns")

    if p_w == 0.0:
        return 0.0
    if p_w <= tab[0, 0]:
        # below the table: free-molecular asymptote
        return p_w * ratio
    if p_w >= tab[-1, 0]:
        # above the table: hold the last cold/warm ratio
        return p_w * (tab[-1, 1] / tab[-1, 0])
    from scipy.interpolate import PchipInterpolator
    interp = PchipInterpolator(np.log(tab[:, 0]), np.log(tab[:, 1]))
    return float(math.exp(interp(math.log(p_w))))


def eddy_current_q(particle: MagnetParticle, omega: float, z0: float,
                   k_beta: float, constants: PhysicalConstants = CONSTANTS
                   ) -> float:
    """Quality factor of the libration mode against eddy-current loss.

    While the sphere librates by beta_A it modulates the field it sits in
    by Delta B = (mu0 / 4 pi) mu beta_A / (2 z0)^3 (the leading change of
    its own reflected field).  In the small-sphere limit a << skin depth,
    the absorptive part of the magnetic polarisability is
    alpha'' = (a / delta)^2 / 5 with delta = sqrt(2 / (sigma mu0 omega)),
    and the mean dissipated power for a drive of amplitude B is

        W = (1/2) mu0^-1 omega alpha'' B^2 V = (pi/15) sigma omega^2 a^5 B^2.

    With the stored energy E = (1/2) k_beta beta_A^2 the amplitude drops
    out of Q = omega E / W, so no amplitude argument is needed.  Returns
    ``inf`` for a non-conducting sphere.
    """
    if not omega > 0.0:
        raise InvalidParameterError("omega must be > 0")
    if not (z0 > 0.0 and k_beta > 0.0):
        raise InvalidParameterError("z0 and k_beta must be > 0")
    sigma = particle.conductivity
    if sigma == 0.0:
        return math.inf
    delta = math.sqrt(2.0 / (sigma * constants.mu0 * omega))
    if delta < 10.0 * particle.radius:
        warnings.warn(
            f"skin depth {delta:.3g} m is not large compared with the sphere "
            f"radius {particle.radius:.3g} m; small-sphere loss formula "
            "is outside its validity range", ValidityWarning, stacklevel=2)
    mu = particle.dipole_moment
    db_per_rad = (constants.mu0 / (4.0 * math.pi)) * mu / (2.0 * z0) ** 3
    # W / beta_A^2 and E / beta_A^2; the amplitude cancels in the ratio.
    w_per_rad2 = (math.pi / 15.0) * sigma * omega ** 2 \
        * particle.radius ** 5 * db_per_rad ** 2
    e_per_rad2 = 0.5 * k_beta
    return omega * e_per_rad2 / w_per_rad2


def hysteresis_q(particle: MagnetParticle, z0: float) -> float:
    """Quality factor of the libration mode against hysteresis loss.

    The same field ripple that drives eddy currents is absorbed by the
    out-of-phase susceptibility chi'', and the amplitude again cancels:

        1/Q = (chi'' / 24) (a / z0)^3.

    Returns ``inf`` when chi'' = 0.
    """
    if not z0 > 0.0:
        raise InvalidParameterError("z0 must be > 0")
    if particle.chi_imag == 0.0:
        return math.inf
    return 24.0 / (particle.chi_imag * (particle.radius / z0) ** 3)


def hysteresis_chi_for_q(q: float, radius: float, z0: float) -> float:
    """Invert :func:`hysteresis_q`: the chi'' that explains a measured Q."""
    if not (q > 0.0 and radius > 0.0 and z0 > 0.0):
        raise InvalidParameterError("q, radius and z0 must be > 0")
    return 24.0 / (q * (radius / z0) ** 3)


def q_from_ringdown(frequency: float, tau: float) -> float:
    """Quality factor from an amplitude ringdown time: Q = pi f tau."""
    if not (frequency > 0.0 and tau > 0.0):
        raise InvalidParameterError("frequency and tau must be > 0")
    return math.pi * frequency * tau


@dataclass(frozen=True)
class DampingBudget:
    """Per-channel amplitude damping rates 1/tau [1/s] for one mode.

    Only the gas channel matching the mode kind is populated; the other
    is zero, so ``total`` is always the plain sum of the four channels
    plus the residual.
    """

    mode: str
    frequency: float            # [Hz]
    gas_translational: float
    gas_rotational: float
    eddy: float
    hysteresis: float
    residual_other: float
    total: float
    q: float                    # pi f tau for the total

    @property
    def tau(self) -> float:
        return math.inf if self.total == 0.0 else 1.0 / self.total


_TRANSLATIONAL_MODES = frozenset({"x", "y", "z"})
_ROTATIONAL_MODES = frozenset({"beta", "alpha"})


def damping_budget(particle: MagnetParticle, env: Environment, mode: str,
                   frequency: float, z0: float, k_beta: float,
                   residual_other: float = 0.0,
                   pressure_cold: float | None = None,
                   constants: PhysicalConstants = CONSTANTS) -> DampingBudget:
    """Compose the loss channels for one rigid-body mode.

    Parameters
    ----------
    mode : str
        One of ``x, y, z`` (translational gas drag) or ``beta, alpha``
        (rotational gas drag).
    frequency : float
        Mode frequency [Hz], used for the eddy channel and for Q.
    z0, k_beta : float
        Levitation height and librational stiffness entering the magnetic
        loss models.
    residual_other : float, optional
        Extra rate 1/tau [1/s] for unmodelled channels (e.g. a fitted
        zero-pressure intercept).
    pressure_cold : float, optional
        Pressure at the trap [Pa].  Defaults to the thermomolecular
        low-pressure limit applied to ``env.pressure_warm``.
    """
    if mode not in _TRANSLATIONAL_MODES | _ROTATIONAL_MODES:
        raise InvalidParameterError(
            f"mode must be one of x, y, z, beta, alpha; got {mode!r}")
    if not frequency > 0.0:
        raise InvalidParameterError("frequency must be > 0")
    if residual_other < 0.0:
        raise InvalidParameterError("residual_other must be >= 0")
    if pressure_cold is None:
        pressure_cold = thermomolecular_pressure(env)
    v_th = mean_thermal_velocity(env.temperature_cold, env.gas_mass, constants)
    omega = 2.0 * math.pi * frequency

    gas_t = gas_r = 0.0
    if mode in _TRANSLATIONAL_MODES:
        gas_t = gas_damping(pressure_cold, particle, v_th, "translational")
    else:
        gas_r = gas_damping(pressure_cold, particle, v_th, "rotational")

    q_eddy = eddy_current_q(particle, omega, z0, k_beta, constants)
    q_hyst = hysteresis_q(particle, z0)
    rate_eddy = 0.0 if math.isinf(q_eddy) else omega / (2.0 * q_eddy)
    rate_hyst = 0.0 if math.isinf(q_hyst) else omega / (2.0 * q_hyst)

    total = gas_t + gas_r + rate_eddy + rate_hyst + residual_other
    q_total = math.inf if total == 0.0 else q_from_ringdown(frequency, 1.0 / total)
    return DampingBudget(mode=mode, frequency=frequency,
                         gas_translational=gas_t, gas_rotational=gas_r,
                         eddy=rate_eddy, hysteresis=rate_hyst,
                         residual_other=residual_other, total=total, q=q_total)


@dataclass(frozen=True)
class DampingFit:
    """Polynomial fit of damping rate versus pressure.

    ``coefficients`` are ascending powers of pressure in whatever unit the
    input used (the CLI feeds mbar), so ``coefficients[0]`` is the
    zero-pressure intercept and ``coefficients[1]`` the linear slope.
    Residual sums of squares for both polynomial orders are reported so a
    quadratic component can be judged against the linear model.
    """

    order: int
    coefficients: tuple[float, ...]
    stderrs: tuple[float, ...]
    rss_order1: float
    rss_order2: float
    n_points: int


def fit_damping_vs_pressure(pressures, rates, order: int = 1) -> DampingFit:
    """Polynomial least squares of 1/tau against pressure.

    Parameters are plain arrays in matching units; ``order`` may be 1
    (linear) or 2 (quadratic).  A determined system (``order + 1``
    points) interpolates exactly with undefined (NaN) standard errors; a
    rank-deficient design (e.g. repeated pressures only) raises
    :class:`FitError`.  The residual sum of squares is reported for both
    orders whenever enough points exist, so the linear and quadratic
    models can be compared on the same data.
    """
    p = np.asarray(pressures, dtype=float)
    r = np.asarray(rates, dtype=float)
    if order not in (1, 2):
        raise InvalidParameterError("order must be 1 or 2")
    if p.shape != r.shape or p.ndim != 1:
        raise InvalidParameterError("pressures and rates must be equal-length 1-D")
    if p.size < order + 1:
        raise InvalidParameterError(
            f"need at least {order + 1} points for an order-{order} fit")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(r))):
        raise InvalidParameterError("inputs must be finite")

    # fit on a unit-scaled pressure axis (raw mbar-scale Vandermonde
    # matrices are badly conditioned) and convert coefficients back
    scale = float(np.max(np.abs(p))) or 1.0

    def solve(k):
        powers = scale ** np.arange(k + 1)
        design = np.vander(p / scale, k + 1, increasing=True)
        coeff, _, rank, _ = np.linalg.lstsq(design, r, rcond=None)
        if rank < k + 1:
            raise FitError(
                f"design matrix is rank deficient (rank {rank} < {k + 1}); "
                f"pressures do not span an order-{k} polynomial")
        resid = r - design @ coeff
        rss_val = float(resid @ resid)
        dof = p.size - (k + 1)
        if dof > 0:
            cov = (rss_val / dof) * np.linalg.inv(design.T @ design)
            stderr = np.sqrt(np.diag(cov)) / powers
        else:
            stderr = np.full(k + 1, np.nan)
        return coeff / powers, stderr, rss_val

    _, _, rss1 = solve(1)
    rss2 = solve(2)[2] if p.size >= 3 else float("nan")
    coeff, se, _ = solve(order)
    return DampingFit(order=order,
                      coefficients=tuple(float(v) for v in coeff),
                      stderrs=tuple(float(v) for v in se),
                      rss_order1=rss1, rss_order2=rss2,
                      n_points=int(p.size))


# --------------------------------------------------------------------------
# damping-table CSV interface
# --------------------------------------------------------------------------

DAMPING_CSV_HEADER = "P_mbar,side,inv_tau_per_s,mode_label"

_SIDES = ("warm", "cold")


def write_damping_csv(path: str, rows) -> None:
    """Write damping rates versus pressure as CSV (atomic).

    ``rows`` is an iterable of (pressure_mbar, side, rate_per_s,
    mode_label) tuples; ``side`` records whether the pressure column is
    the warm-side gauge reading or the pressure at the cold trap.
    """
    buf = io.StringIO()
    buf.write(DAMPING_CSV_HEADER + "\n")
    for pressure, side, rate, label in rows:
        if side not in _SIDES:
            raise InvalidParameterError(
                f"side must be one of {_SIDES}, got {side!r}")
        buf.write(f"{float(pressure)!r},{side},{float(rate)!r},{label}\n")
    atomic_write_text(path, buf.getvalue())


def load_damping_csv(path: str):
    """Read a damping table back: (side, {mode_label: (P_mbar, rates)}).

    The file must use one pressure side throughout; mixing warm and cold
    rows in one table would make any subsequent fit meaningless.
    """
    per_label: dict[str, tuple[list, list]] = {}
    side_seen: str | None = None
    with open(path, encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or ",".join(header) != DAMPING_CSV_HEADER:
            got = "" if header is None else ",".join(header)
            raise DataFormatError(
                f"{path}: expected header {DAMPING_CSV_HEADER!r}, got {got!r}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataFormatError(
                    f"{path}:{line}: expected 4 columns, got {len(row)}")
            raw_p, side, raw_rate, label = (field.strip() for field in row)
            try:
                pressure = float(raw_p)
            except ValueError:
                raise DataFormatError(
                    f"{path}:{line}: column P_mbar is not a number: "
                    f"{raw_p!r}") from None
            if pressure < 0.0:
                raise DataFormatError(
                    f"{path}:{line}: column P_mbar must be >= 0")
            if side not in _SIDES:
                raise DataFormatError(
                    f"{path}:{line}: column side must be 'warm' or 'cold', "
                    f"got {side!r}")
            if side_seen is None:
                side_seen = side
            elif side != side_seen:
                raise DataFormatError(
                    f"{path}:{line}: column side mixes {side_seen!r} and "
                    f"{side!r} in one table")
            try:
                rate = float(raw_rate)
            except ValueError:
                raise DataFormatError(
                    f"{path}:{line}: column inv_tau_per_s is not a number: "
                    f"{raw_rate!r}") from None
            if not label:
                raise DataFormatError(
                    f"{path}:{line}: column mode_label is empty")
            per_label.setdefault(label, ([], []))
            per_label[label][0].append(pressure)
            per_label[label][1].append(rate)
    if not per_label:
        raise DataFormatError(f"{path}: no data rows")
    tables = {label: (np.asarray(ps), np.asarray(rs))
              for label, (ps, rs) in per_label.items()}
    return side_seen, tables
