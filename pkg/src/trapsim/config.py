"""Scenario config files: sectioned key=value text with units in key names.

A scenario file holds up to four sections::

    [particle]
    radius_um = 30.1
    density_kg_m3 = 7430
    remanent_field_t = 0.71
    conductivity_s_m = 670e3        # optional, default 0
    chi_imag = 1e-4                 # optional, default 0

    [trap]
    well_radius_mm = 2.5
    well_depth_mm = 1.5
    tilt_deg = 0                    # optional
    tilt_axis = x                   # optional: x, y, or "dx,dy"

    [environment]
    temperature_cold_k = 4.2        # all optional, defaults shown
    temperature_warm_k = 293
    pressure_warm_mbar = 0
    gas = helium                    # or gas_mass_kg = <value>, not both
    tube_radius_cm = 0.97

    [constants]
    g_m_s2 = 9.81                   # all optional
    mu0_t_m_a = 1.25663706212e-06
    kb_j_k = 1.380649e-23
    hbar_j_s = 1.054571817e-34

Every key name carries its unit, so a value in the wrong unit is a
parse-time failure (there is no key it could legally sit under).
Unknown sections or keys are errors, as is a missing required key in a
present section; error messages name the offending ``section.key``.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass

from .core import (
    GAS_MASSES,
    MBAR,
    Environment,
    InvalidParameterError,
    MagnetParticle,
    PhysicalConstants,
    TrapSystem,
    TrapsimError,
)

__all__ = ["ConfigError", "ScenarioConfig", "load_config"]


class ConfigError(TrapsimError, ValueError):
    """A scenario file is missing, malformed, or violates the schema."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario: domain objects plus file provenance.

    ``particle`` and ``trap`` are ``None`` when their sections are absent
    (commands that need them raise a :class:`ConfigError` naming the
    section); ``environment`` and ``constants`` always exist, falling
    back to their defaults.
    """

    particle: MagnetParticle | None
    trap: TrapSystem | None
    environment: Environment
    constants: PhysicalConstants
    path: str
    sha256: str


_SCHEMA = {
    "particle": {
        "required": ("radius_um", "density_kg_m3", "remanent_field_t"),
        "optional": ("conductivity_s_m", "chi_imag"),
    },
    "trap": {
        "required": ("well_radius_mm", "well_depth_mm"),
        "optional": ("tilt_deg", "tilt_axis"),
    },
    "environment": {
        "required": (),
        "optional": ("temperature_cold_k", "temperature_warm_k",
                     "pressure_warm_mbar", "gas", "gas_mass_kg",
                     "tube_radius_cm"),
    },
    "constants": {
        "required": (),
        "optional": ("g_m_s2", "mu0_t_m_a", "kb_j_k", "hbar_j_s"),
    },
}


def _float(section: str, key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(
            f"{section}.{key}: not a number: {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{section}.{key}: must be finite, got {raw!r}")
    return value


def _tilt_axis(raw: str) -> tuple[float, float]:
    text = raw.strip().lower()
    if text == "x":
        return (1.0, 0.0)
    if text == "y":
        return (0.0, 1.0)
    parts = text.split(",")
    if len(parts) == 2:
        try:
            return (float(parts[0]), float(parts[1]))
        except ValueError:
            pass
    raise ConfigError(
        f"trap.tilt_axis: expected 'x', 'y' or 'dx,dy', got {raw!r}")


def load_config(path: str) -> ScenarioConfig:
    """Read and validate a scenario file."""
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive
    try:
        with open(path, encoding="utf-8") as handle:
            content = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        parser.read_string(content, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    try:
        return _build_scenario(parser, content, path)
    except ConfigError as exc:
        if str(exc).startswith(path):
            raise
        raise ConfigError(f"{path}: {exc}") from None


def _build_scenario(parser: configparser.ConfigParser, content: str,
                    path: str) -> ScenarioConfig:
    sections: dict[str, dict[str, str]] = {}
    for name in parser.sections():
        if name not in _SCHEMA:
            raise ConfigError(
                f"{path}: unknown section [{name}] (known: "
                f"{', '.join(_SCHEMA)})")
        schema = _SCHEMA[name]
        known = set(schema["required"]) | set(schema["optional"])
        entries = dict(parser.items(name))
        for key in entries:
            if key not in known:
                raise ConfigError(f"{path}: unknown key {name}.{key}")
        for key in schema["required"]:
            if key not in entries:
                raise ConfigError(f"{path}: missing required key {name}.{key}")
        sections[name] = entries

    cons = sections.get("constants", {})
    try:
        constants = PhysicalConstants(
            mu0=_float("constants", "mu0_t_m_a", cons["mu0_t_m_a"])
            if "mu0_t_m_a" in cons else PhysicalConstants.mu0,
            g=_float("constants", "g_m_s2", cons["g_m_s2"])
            if "g_m_s2" in cons else PhysicalConstants.g,
            kB=_float("constants", "kb_j_k", cons["kb_j_k"])
            if "kb_j_k" in cons else PhysicalConstants.kB,
            hbar=_float("constants", "hbar_j_s", cons["hbar_j_s"])
            if "hbar_j_s" in cons else PhysicalConstants.hbar)
    except InvalidParameterError as exc:
        raise ConfigError(f"{path}: [constants]: {exc}") from exc

    particle = None
    if "particle" in sections:
        p = sections["particle"]
        try:
            particle = MagnetParticle(
                radius=_float("particle", "radius_um", p["radius_um"]) * 1e-6,
                density=_float("particle", "density_kg_m3", p["density_kg_m3"]),
                remanent_field=_float("particle", "remanent_field_t",
                                      p["remanent_field_t"]),
                conductivity=_float("particle", "conductivity_s_m",
                                    p.get("conductivity_s_m", "0")),
                chi_imag=_float("particle", "chi_imag", p.get("chi_imag", "0")),
                mu0=constants.mu0)
        except InvalidParameterError as exc:
            raise ConfigError(f"{path}: [particle]: {exc}") from exc

    trap = None
    if "trap" in sections:
        if particle is None:
            raise ConfigError(
                f"{path}: [trap] requires a [particle] section")
        t = sections["trap"]
        try:
            trap = TrapSystem(
                well_radius=_float("trap", "well_radius_mm",
                                   t["well_radius_mm"]) * 1e-3,
                well_depth=_float("trap", "well_depth_mm",
                                  t["well_depth_mm"]) * 1e-3,
                particle=particle,
                tilt=math.radians(_float("trap", "tilt_deg",
                                         t.get("tilt_deg", "0"))),
                tilt_axis=_tilt_axis(t.get("tilt_axis", "x")))
        except InvalidParameterError as exc:
            raise ConfigError(f"{path}: [trap]: {exc}") from exc

    e = sections.get("environment", {})
    if "gas" in e and "gas_mass_kg" in e:
        raise ConfigError(
            f"{path}: environment.gas and environment.gas_mass_kg are "
            "mutually exclusive")
    if "gas" in e:
        gas_name = e["gas"].strip().lower()
        if gas_name not in GAS_MASSES:
            raise ConfigError(
                f"{path}: environment.gas: unknown species {e['gas']!r} "
                f"(known: {', '.join(sorted(GAS_MASSES))})")
        gas_mass = GAS_MASSES[gas_name]
    elif "gas_mass_kg" in e:
        gas_mass = _float("environment", "gas_mass_kg", e["gas_mass_kg"])
    else:
        gas_mass = GAS_MASSES["helium"]
    try:
        environment = Environment(
            temperature_cold=_float("environment", "temperature_cold_k",
                                    e.get("temperature_cold_k", "4.2")),
            temperature_warm=_float("environment", "temperature_warm_k",
                                    e.get("temperature_warm_k", "293")),
            pressure_warm=_float("environment", "pressure_warm_mbar",
                                 e.get("pressure_warm_mbar", "0")) * MBAR,
            gas_mass=gas_mass,
            tube_radius=_float("environment", "tube_radius_cm",
                               e.get("tube_radius_cm", "0.97")) * 1e-2)
    except InvalidParameterError as exc:
        raise ConfigError(f"{path}: [environment]: {exc}") from exc

    return ScenarioConfig(particle=particle, trap=trap,
                          environment=environment, constants=constants,
                          path=path,
                          sha256=hashlib.sha256(content.encode()).hexdigest())
