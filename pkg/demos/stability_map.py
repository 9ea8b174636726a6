"""Storage-time map of electrons released at rest in the RF quadrupole.

Integrates the classical motion over a grid of release energies and drive
phases (10 us horizon), then reports the highest energy that survives at
every phase and which phases hold electrons longest above it.

    python3 demos/stability_map.py [threads]
"""
import sys

import numpy as np

from trapped_electrons import trajectory as tj
from trapped_electrons.constants import EV, K_B

threads = int(sys.argv[1]) if len(sys.argv) > 1 else 1
drive = tj.DriveField.from_trap()
energies = np.arange(0, 401, 20) * K_B / EV
phis = np.linspace(0, 2 * np.pi, 12, endpoint=False)
m = tj.stability_map(energies, phis, drive, horizon=10e-6, threads=threads)

print("rows: release energy [K]; columns: drive phase [deg]; '#' survives, '.' lost")
print("       " + "".join(f"{np.degrees(p):5.0f}" for p in phis))
for e, lost in zip(energies, m.lost):
    print(f"{tj.threshold_kelvin(e):6.0f} " + "".join(f"{'.' if x else '#':>5}" for x in lost))
print(f"all-phase threshold: {tj.threshold_kelvin(m.stable_threshold()):.0f} K "
      f"({m.stable_threshold() * 1e3:.1f} meV)")
surv = m.survival_by_phase()
print("mean storage time above threshold by phase [us]:",
      np.round(surv * 1e6, 2).tolist())
print(f"static-field energy drift of the integrator: {tj.static_energy_drift(drive):.1e}")
