"""Command-line front end: ``trapsim <analyze|solve|sweep|fit|sense>``.

Commands read a scenario config (``-c``/``--config`` or the
``TRAPSIM_CONFIG`` environment variable), run the corresponding library
pipeline, and emit JSON (stdout or ``--out``) or CSV (``--out``).  All
data goes to the output stream or file; all diagnostics go to stderr.
File writes are atomic.  Exit codes: 0 success, 2 for configuration,
usage and input-validation problems, 1 for runtime failures (solver,
convergence, fitting).

JSON payloads carry a ``schema_version`` field and use only strictly
valid JSON: non-finite numbers (an undetectable decay time, an undefined
standard error) are serialized as ``null``.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import os
import sys

import numpy as np

from .config import ConfigError, ScenarioConfig, load_config
from .core import (
    MBAR,
    DataFormatError,
    InvalidParameterError,
    InvalidTableError,
    TrapsimError,
    atomic_write_text,
)
from .dissipation import (
    fit_damping_vs_pressure,
    gas_damping,
    load_damping_csv,
    mean_thermal_velocity,
    q_from_ringdown,
    write_damping_csv,
)
from .dynamics import (
    COORD_LABELS,
    find_equilibrium,
    mode_spectrum,
    tilt_sweep,
    write_sweep_csv,
)
from .image_plane import (
    plane_mode_frequencies,
    radius_from_frequencies,
    thermal_rms,
)
from .magnetostatics import export_mesh_csv, trap_solver
from .noise import (
    fit_exponential_ringdown,
    fit_lorentzian,
    load_ringdown_csv,
    load_spectrum_csv,
    sensitivity_report,
)

__all__ = ["main", "build_parser"]

SCHEMA_VERSION = 1
CONFIG_ENV_VAR = "TRAPSIM_CONFIG"

#: 1/tau channels emitted by the pressure sweep, in row order
_PRESSURE_SWEEP_MODES = (("z", "translational"), ("beta", "rotational"))


# --------------------------------------------------------------------------
# plumbing
# --------------------------------------------------------------------------

def _fail(message: str) -> None:
    print(f"trapsim: error: {message}", file=sys.stderr)


def _require(config: ScenarioConfig, *sections: str) -> None:
    for section in sections:
        if getattr(config, section) is None:
            raise ConfigError(
                f"{config.path}: missing required [{section}] section")


def _load(args, *need: str) -> ScenarioConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        raise ConfigError(
            f"no config file: pass -c/--config or set {CONFIG_ENV_VAR}")
    config = load_config(path)
    _require(config, *need)
    return config


def _json_ready(value):
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def _emit_json(payload: dict, out: str | None) -> None:
    document = {"schema_version": SCHEMA_VERSION, **payload}
    text = json.dumps(_json_ready(document), indent=2, allow_nan=False) + "\n"
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _save_svg(path: str, series, xlabel: str, ylabel: str,
              logx: bool = False, logy: bool = False) -> None:
    """Self-contained SVG line plot; series = (label, x, y, format)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, x, y, fmt in series:
        ax.plot(x, y, fmt, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg")
    plt.close(fig)
    atomic_write_text(path, buf.getvalue())


def _parse_range(text: str, what: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(
            f"{what}: expected start:stop:steps, got {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        steps = int(parts[2])
    except ValueError:
        raise ConfigError(
            f"{what}: expected numeric start:stop and integer steps, "
            f"got {text!r}") from None
    if steps < 1:
        raise ConfigError(f"{what}: steps must be >= 1")
    if stop < start:
        raise ConfigError(f"{what}: stop must be >= start")
    if steps == 1 and stop != start:
        raise ConfigError(f"{what}: a single step needs start == stop")
    return np.linspace(start, stop, steps)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    config = _load(args, "particle")
    particle = config.particle
    radius_source = "config"
    if args.radius_from is not None:
        f_z, f_beta = args.radius_from
        if not (f_z > 0.0 and f_beta > 0.0):
            raise ConfigError("--radius-from frequencies must be > 0")
        radius = radius_from_frequencies(
            2.0 * math.pi * f_z, 2.0 * math.pi * f_beta, config.constants)
        particle = dataclasses.replace(particle, radius=radius)
        radius_source = "frequencies"
    equilibrium = plane_mode_frequencies(particle, config.constants)
    temperature = config.environment.temperature_cold
    _emit_json({
        "command": "analyze",
        "radius_um": particle.radius * 1e6,
        "radius_source": radius_source,
        "mass_kg": particle.mass,
        "inertia_kg_m2": particle.inertia,
        "dipole_moment_a_m2": particle.dipole_moment,
        "z0_m": equilibrium.z0,
        "k_z_n_per_m": equilibrium.k_z,
        "k_beta_n_m_per_rad": equilibrium.k_beta,
        "f_z_hz": equilibrium.f_z,
        "f_beta_hz": equilibrium.f_beta,
        "temperature_k": temperature,
        "thermal_z_rms_m": thermal_rms(temperature, equilibrium.k_z,
                                       config.constants),
        "thermal_beta_rms_rad": thermal_rms(temperature, equilibrium.k_beta,
                                            config.constants),
    }, args.out)
    return 0


def cmd_solve(args) -> int:
    config = _load(args, "particle", "trap")
    trap = config.trap
    if args.tilt is not None:
        trap = dataclasses.replace(trap, tilt=math.radians(args.tilt))
    solver = trap_solver(trap, args.resolution)
    equilibrium = find_equilibrium(trap, solver=solver,
                                   constants=config.constants)
    spectrum = mode_spectrum(trap, equilibrium, solver=solver,
                             constants=config.constants)
    if args.mesh_csv:
        mu_vec = trap.particle.dipole_moment \
            * np.asarray(equilibrium.moment_direction())
        solution = solver.solve(mu_vec, equilibrium.position)
        export_mesh_csv(args.mesh_csv, solver.mesh, solution.strengths)
    _emit_json({
        "command": "solve",
        "tilt_deg": math.degrees(trap.tilt),
        "resolution": args.resolution,
        "panel_count": solver.mesh.n_panels,
        "condition_estimate": solver.condition_estimate,
        "equilibrium": {
            "x_m": equilibrium.x, "y_m": equilibrium.y, "z_m": equilibrium.z,
            "beta_rad": equilibrium.beta, "alpha_rad": equilibrium.alpha,
        },
        "modes": [
            {"label": label, "frequency_hz": float(freq), "marginal": flag}
            for label, freq, flag in zip(spectrum.labels,
                                         spectrum.frequencies,
                                         spectrum.marginal)
        ],
    }, args.out)
    return 0


def cmd_sweep(args) -> int:
    if args.tilt_range is not None:
        angles_deg = _parse_range(args.tilt_range, "--tilt-range")
        config = _load(args, "particle", "trap")
        points = tilt_sweep(config.trap, np.radians(angles_deg),
                            resolution=args.resolution,
                            constants=config.constants)
        write_sweep_csv(args.out, points)
        if args.svg:
            series = [
                (label, angles_deg,
                 [p.spectrum.frequency(label) for p in points], "-o")
                for label in COORD_LABELS]
            _save_svg(args.svg, series, "tilt [deg]", "frequency [Hz]")
    else:
        pressures_mbar = _parse_range(args.pressure_range, "--pressure-range")
        config = _load(args, "particle")
        env = config.environment
        v_th = mean_thermal_velocity(env.temperature_cold, env.gas_mass,
                                     config.constants)
        rows = []
        for pressure in pressures_mbar:
            for label, kind in _PRESSURE_SWEEP_MODES:
                rate = gas_damping(pressure * MBAR, config.particle, v_th,
                                   kind)
                rows.append((float(pressure), "cold", rate, label))
        write_damping_csv(args.out, rows)
        if args.svg:
            series = []
            for label, _kind in _PRESSURE_SWEEP_MODES:
                rates = [row[2] for row in rows if row[3] == label]
                series.append((label, pressures_mbar, rates, "-o"))
            _save_svg(args.svg, series, "cold-side pressure [mbar]",
                      "1/tau [1/s]")
    return 0


def _fit_ringdown(args) -> dict:
    record = load_ringdown_csv(args.input)
    fit = fit_exponential_ringdown(record)
    q = None
    if fit.carrier_frequency is not None and math.isfinite(fit.tau):
        q = q_from_ringdown(fit.carrier_frequency, fit.tau)
    if args.svg:
        series = [("amplitude", fit.times, fit.amplitudes, "o")]
        if math.isfinite(fit.tau):
            model = fit.amplitude0 * np.exp(-(fit.times - fit.times[0])
                                            / fit.tau)
            series.append(("fit", fit.times, model, "-"))
        _save_svg(args.svg, series, "time [s]", "amplitude", logy=True)
    return {
        "kind": "ringdown",
        "input": args.input,
        "tau_s": fit.tau,
        "tau_stderr_s": fit.tau_stderr,
        "amplitude0": fit.amplitude0,
        "carrier_frequency_hz": fit.carrier_frequency,
        "q": q,
        "curvature_zscore": fit.curvature_zscore,
        "n_points": fit.n_points,
        "decaying": fit.decaying,
        "note": fit.note,
    }


def _fit_psd(args) -> dict:
    spectrum = load_spectrum_csv(args.input)
    band = tuple(args.band) if args.band is not None else None
    fit = fit_lorentzian(spectrum, exclude_bins=args.exclude_bins,
                         band=band, fix_q=args.fix_q)
    if args.svg:
        in_band = (spectrum.frequencies >= fit.band[0]) \
            & (spectrum.frequencies <= fit.band[1])
        f = spectrum.frequencies[in_band]
        series = [("data", f, spectrum.psd[in_band], "-"),
                  ("fit", f, fit.evaluate(f), "--")]
        _save_svg(args.svg, series, "frequency [Hz]", "PSD", logy=True)
    return {
        "kind": "psd",
        "input": args.input,
        "a0": fit.a0, "a0_stderr": fit.a0_stderr,
        "a1": fit.a1, "a1_stderr": fit.a1_stderr,
        "f0_hz": fit.f0, "f0_stderr_hz": fit.f0_stderr,
        "q": fit.q, "q_stderr": fit.q_stderr,
        "q_fixed": fit.q_fixed,
        "excluded_bins": fit.excluded_bins,
        "band_hz": list(fit.band),
        "residual_rms": fit.residual_rms,
        "n_points": fit.n_points,
        "exclusion_shifted_a1": fit.exclusion_shifted_a1,
    }


def _fit_damping(args) -> dict:
    side, tables = load_damping_csv(args.input)
    fits = {}
    series = []
    for label in sorted(tables):
        pressures, rates = tables[label]
        fit = fit_damping_vs_pressure(pressures, rates, order=args.order)
        fits[label] = {
            "coefficients": list(fit.coefficients),
            "stderrs": list(fit.stderrs),
            "rss_order1": fit.rss_order1,
            "rss_order2": fit.rss_order2,
            "n_points": fit.n_points,
        }
        if args.svg:
            grid = np.linspace(float(pressures.min()), float(pressures.max()),
                               200)
            model = np.polynomial.polynomial.polyval(grid, fit.coefficients)
            series.append((f"{label} data", pressures, rates, "o"))
            series.append((f"{label} fit", grid, model, "-"))
    if args.svg:
        _save_svg(args.svg, series, f"{side}-side pressure [mbar]",
                  "1/tau [1/s]")
    return {
        "kind": "damping",
        "input": args.input,
        "side": side,
        "order": args.order,
        "fits": fits,
    }


def cmd_fit(args) -> int:
    handler = {"ringdown": _fit_ringdown, "psd": _fit_psd,
               "damping": _fit_damping}[args.kind]
    _emit_json(handler(args), args.out)
    return 0


def cmd_sense(args) -> int:
    config = _load(args, "particle")
    if args.mode not in COORD_LABELS:
        raise ConfigError(
            f"unknown mode label {args.mode!r} (known: "
            f"{', '.join(COORD_LABELS)})")
    if not args.frequency > 0.0:
        raise ConfigError("--frequency must be > 0")
    if not args.q > 0.0:
        raise ConfigError("--q must be > 0")
    temperature = args.temperature if args.temperature is not None \
        else config.environment.temperature_cold
    measured = None
    if args.measured_torque is not None:
        if args.measured_torque < 0.0:
            raise ConfigError("--measured-torque must be >= 0")
        measured = args.measured_torque ** 2
    report = sensitivity_report(config.particle, args.frequency, args.q,
                                temperature, mode=args.mode,
                                measured_torque_psd=measured,
                                constants=config.constants)
    _emit_json({
        "command": "sense",
        "mode": report.mode,
        "frequency_hz": report.frequency,
        "q": report.q,
        "temperature_k": report.temperature,
        "tau_s": report.tau,
        "t_over_tau_k_per_s": report.t_over_tau,
        "torque_source": report.torque_source,
        "force_psd_n2_per_hz": report.force_psd,
        "force_asd_n_per_sqrt_hz": math.sqrt(report.force_psd),
        "accel_psd_m2_s4_per_hz": report.accel_psd,
        "accel_asd_m_s2_per_sqrt_hz": math.sqrt(report.accel_psd),
        "torque_psd_n2m2_per_hz": report.torque_psd,
        "torque_asd_nm_per_sqrt_hz": math.sqrt(report.torque_psd),
        "field_psd_t2_per_hz": report.field_psd,
        "field_asd_t_per_sqrt_hz": math.sqrt(report.field_psd)
        if math.isfinite(report.field_psd) else math.inf,
        "field_asd_quantum_limit_t_per_sqrt_hz":
            math.sqrt(report.field_psd_quantum_limit),
    }, args.out)
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", metavar="FILE",
                        help="scenario config file (default: "
                             f"${CONFIG_ENV_VAR})")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for any stochastic synthesis "
                             "(commands are otherwise deterministic)")

    parser = argparse.ArgumentParser(
        prog="trapsim",
        description="Levitated-magnet trap analysis: equilibria, mode "
                    "spectra, damping and sensing figures of merit.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="<command>")

    p = sub.add_parser("analyze", parents=[common],
                       help="closed-form plane-trap report from a config")
    p.add_argument("--radius-from", nargs=2, type=float,
                   metavar=("F_Z", "F_BETA"),
                   help="infer the sphere radius from the two stiff-mode "
                        "frequencies [Hz] instead of the config radius")
    p.add_argument("--out", metavar="FILE", help="write JSON here "
                   "instead of stdout")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("solve", parents=[common],
                       help="equilibrium and 5-mode spectrum in the "
                            "finite well")
    p.add_argument("--tilt", type=float, metavar="DEG",
                   help="override the config tilt angle [deg]")
    p.add_argument("--resolution", type=int, default=2000, metavar="N",
                   help="panel-count target (default 2000)")
    p.add_argument("--mesh-csv", metavar="FILE",
                   help="dump the mesh with solved panel strengths")
    p.add_argument("--out", metavar="FILE", help="write JSON here "
                   "instead of stdout")
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("sweep", parents=[common],
                       help="tilt sweep of the mode spectrum, or gas "
                            "damping versus pressure")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--tilt-range", metavar="START:STOP:STEPS",
                       help="tilt angles in degrees")
    group.add_argument("--pressure-range", metavar="START:STOP:STEPS",
                       help="cold-side pressures in mbar")
    p.add_argument("--resolution", type=int, default=2000, metavar="N",
                   help="panel-count target for tilt sweeps (default 2000)")
    p.add_argument("--out", required=True, metavar="FILE",
                   help="output CSV path")
    p.add_argument("--svg", metavar="FILE", help="also write a line plot")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("fit", parents=[common],
                       help="fit an imported CSV record")
    p.add_argument("kind", choices=("ringdown", "psd", "damping"),
                   help="which record type the input file holds")
    p.add_argument("input", metavar="FILE", help="input CSV")
    p.add_argument("--exclude-bins", type=int, default=9, metavar="N",
                   help="PSD fits: bins around the peak to drop "
                        "(default 9; 0 disables)")
    p.add_argument("--band", nargs=2, type=float, metavar=("F_LO", "F_HI"),
                   help="PSD fits: restrict to this frequency band [Hz]")
    p.add_argument("--fix-q", type=float, metavar="Q",
                   help="PSD fits: hold Q fixed at this value")
    p.add_argument("--order", type=int, default=1, choices=(1, 2),
                   help="damping fits: polynomial order (default 1)")
    p.add_argument("--out", metavar="FILE", help="write JSON here "
                   "instead of stdout")
    p.add_argument("--svg", metavar="FILE", help="also write a plot of "
                   "data and fit")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("sense", parents=[common],
                       help="noise-equivalent sensitivity report for one "
                            "mode")
    p.add_argument("--mode", default="alpha", metavar="LABEL",
                   help="mode label (x, y, z, beta, alpha; default alpha)")
    p.add_argument("--frequency", type=float, required=True, metavar="HZ",
                   help="mode frequency [Hz]")
    p.add_argument("--q", type=float, required=True,
                   help="mode quality factor")
    p.add_argument("--temperature", type=float, metavar="K",
                   help="mode temperature (default: config cold "
                        "temperature)")
    p.add_argument("--measured-torque", type=float, metavar="NM_SQRT_HZ",
                   help="measured torque noise sqrt(S_T) [N m/sqrt(Hz)]; "
                        "omit for the thermal limit")
    p.add_argument("--out", metavar="FILE", help="write JSON here "
                   "instead of stdout")
    p.set_defaults(handler=cmd_sense)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.handler(args)
    except (ConfigError, InvalidParameterError, InvalidTableError,
            DataFormatError) as exc:
        _fail(str(exc))
        return 2
    except TrapsimError as exc:
        _fail(str(exc))
        return 1
    except OSError as exc:
        _fail(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
