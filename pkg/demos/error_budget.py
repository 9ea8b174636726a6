"""Single-channel error budget of the Walsh-3 geometric phase gate.

Each channel is switched on alone at its reference magnitude and the Bell
state infidelity is printed, followed by all channels together. The full
run uses the thermal axial state (about 4 quanta, 110 Fock levels) and
takes a few minutes; ``--quick`` starts from the motional ground state.

    python3 demos/error_budget.py [--quick]
"""
import sys
import time

from trapped_electrons import gate

quick = "--quick" in sys.argv
kwargs = dict(nbar0=0.0, fock_cutoff=30) if quick else {}

t0 = time.perf_counter()
rows = gate.error_budget(gate.table_one_channels(), walsh_order=3, **kwargs)
print(f"{'channel':<26}{'magnitude':>14}{'infidelity':>14}")
for r in rows:
    mag = "" if r["magnitude"] is None else f"{r['magnitude']:.3g}"
    print(f"{r['channel']:<26}{mag:>14}{r['infidelity']:>14.2e}")
print(f"({time.perf_counter() - t0:.0f} s, N = {rows[0]['fock_cutoff']})")
