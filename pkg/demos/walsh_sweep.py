"""How Walsh modulation suppresses a static trap-frequency offset.

Sweeps the offset over a decade for Walsh orders 0, 1 and 3 and prints the
infidelity table together with the fitted power law for each order. Starts
from the motional ground state so it finishes in about a minute.

    python3 demos/walsh_sweep.py
"""
import numpy as np

from trapped_electrons import gate
from trapped_electrons.constants import KHZ

offsets = np.geomspace(1, 10, 5) * KHZ
rows = gate.sweep(gate.TrapFrequencyOffset(), offsets, (0, 1, 3), nbar0=0.0, fock_cutoff=30)

table = {w: np.array([r["infidelity"] for r in rows if r["walsh"] == w]) for w in (0, 1, 3)}
print(f"{'offset [kHz]':>12}" + "".join(f"{'W' + str(w):>12}" for w in table))
for k, d in enumerate(offsets):
    print(f"{d / KHZ:12.2f}" + "".join(f"{table[w][k]:12.2e}" for w in table))
for w, inf in table.items():
    slope = np.polyfit(np.log(offsets), np.log(inf), 1)[0]
    print(f"Walsh {w}: infidelity ~ offset^{slope:.2f}")
