"""Anyon monodromy by interference, then a CNOT from braiding a smooth hole round a rough one."""

import sys

from planar_code_lab.circuits import braiding_phase_test
from planar_code_lab.geometry import build_planar
from planar_code_lab.holes import STATES, braid_cnot_demo

lay = build_planar(7)
for moved, fixed, enclose in [("m", "e", True), ("e", "m", True), ("m", "e", False), ("e", "e", True)]:
    phase = braiding_phase_test(lay, moved, fixed, enclose, rng=0)
    where = f"around {fixed}" if enclose else f"beside {fixed}"
    print(f"{moved} {where:10s} -> {phase:+d}")

print("\nhole-braiding CNOT, d=9 (control smooth, target rough)")
print("in      out observables (ZI XI IZ IX ZZ XX)")
for c in STATES:
    for t in STATES:
        entry = braid_cnot_demo(9, c, t, rng=1)
        obs = " ".join(f"{entry['observed'][k]:+d}" if entry["observed"][k] else " 0" for k in ("ZI", "XI", "IZ", "IX", "ZZ", "XX"))
        print(f"|{c}{t}>   {obs}   {'ok' if entry['passed'] else 'MISMATCH'}")

# event log of one run, one JSON object per hole operation
if "--log" in sys.argv:
    braid_cnot_demo(9, "+", "0", rng=1, log=sys.stdout)
