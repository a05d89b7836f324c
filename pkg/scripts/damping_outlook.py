#!/usr/bin/env python3
"""Damping budget and sensing outlook versus warm-side pressure.

For each warm-side pressure the cold-side pressure follows the
thermomolecular model, the per-channel damping rates are composed for
the libration mode, and the resulting Q feeds the field-sensitivity
report.  Prints one row per pressure.

    python3 scripts/damping_outlook.py configs/sphere27.ini
"""

import argparse
import math
from dataclasses import replace

import numpy as np

from trapsim.config import load_config
from trapsim.core import MBAR
from trapsim.dissipation import damping_budget, thermomolecular_pressure
from trapsim.image_plane import plane_mode_frequencies
from trapsim.noise import sensitivity_report


def main() -> None:
    ap = argparse.ArgumentParser(description="damping/sensing outlook table")
    ap.add_argument("config", help="scenario INI file")
    ap.add_argument("--pressures-mbar", default="1e-9:1e-4:6",
                    help="warm-side pressure range lo:hi:n (log spaced)")
    args = ap.parse_args()

    scenario = load_config(args.config)
    particle = scenario.particle
    if particle is None:
        ap.error("config has no [particle] section")
    env = scenario.environment
    lo, hi, n = args.pressures_mbar.split(":")
    pressures = np.geomspace(float(lo), float(hi), int(n))

    eq = plane_mode_frequencies(particle, scenario.constants)
    f_beta = eq.omega_beta / (2 * math.pi)
    print(f"libration mode at {f_beta:.1f} Hz, "
          f"T_cold = {env.temperature_cold:.2f} K")
    print(f"{'P_warm [mbar]':>13s} {'P_cold [mbar]':>13s} {'1/tau [1/s]':>12s} "
          f"{'Q':>10s} {'sqrt(S_B) [fT]':>15s}")
    for p_warm in pressures:
        env_p = replace(env, pressure_warm=p_warm * MBAR)
        p_cold = thermomolecular_pressure(env_p)
        budget = damping_budget(particle, env_p, "beta", f_beta,
                                z0=eq.z0, k_beta=eq.k_beta)
        report = sensitivity_report(particle, f_beta, budget.q,
                                    env.temperature_cold, mode="beta",
                                    constants=scenario.constants)
        print(f"{p_warm:13.3e} {p_cold / MBAR:13.3e} {budget.total:12.4e} "
              f"{budget.q:10.3e} {math.sqrt(report.field_psd) * 1e15:15.3f}")


if __name__ == "__main__":
    main()
