#!/usr/bin/env python3
"""Print the rigid-body mode table for a trap scenario.

Closed-form image-plane numbers come first; with --solve the panel
solver runs as well, so the finite-well corrections are visible side by
side.  Example:

    python3 scripts/mode_report.py configs/sphere30.ini --solve
"""

import argparse
import math

from trapsim.config import load_config
from trapsim.dynamics import COORD_LABELS, find_equilibrium, mode_spectrum
from trapsim.image_plane import plane_mode_frequencies


def main() -> None:
    ap = argparse.ArgumentParser(
        description="rigid-body mode report for one scenario")
    ap.add_argument("config", help="scenario INI file")
    ap.add_argument("--solve", action="store_true",
                    help="also run the panel solver (slower)")
    ap.add_argument("--resolution", type=int, default=2000,
                    help="panel-count target for --solve")
    args = ap.parse_args()

    scenario = load_config(args.config)
    particle = scenario.particle
    if particle is None:
        ap.error("config has no [particle] section")
    eq = plane_mode_frequencies(particle, scenario.constants)
    print(f"particle: a = {particle.radius * 1e6:.2f} um, "
          f"m = {particle.mass * 1e9:.4f} ug, "
          f"mu = {particle.dipole_moment:.4e} A m^2")
    print(f"image plane: z0 = {eq.z0 * 1e6:.2f} um, "
          f"f_z = {eq.omega_z / (2 * math.pi):.3f} Hz, "
          f"f_beta = {eq.omega_beta / (2 * math.pi):.3f} Hz")

    if not args.solve:
        return
    trap = scenario.trap
    if trap is None:
        ap.error("--solve needs a [trap] section")
    equilibrium = find_equilibrium(trap, resolution=args.resolution,
                                   constants=scenario.constants)
    spectrum = mode_spectrum(trap, equilibrium, resolution=args.resolution,
                             constants=scenario.constants)
    print(f"solver ({args.resolution} panel target): "
          f"z0 = {equilibrium.z * 1e6:.2f} um at "
          f"(x, y) = ({equilibrium.x * 1e6:.1f}, "
          f"{equilibrium.y * 1e6:.1f}) um")
    for label in COORD_LABELS:
        print(f"  f_{label:<5s} = {spectrum.frequency(label):10.4f} Hz")


if __name__ == "__main__":
    main()
