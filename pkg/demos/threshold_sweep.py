"""Small bit-flip threshold sweep: failure rates per distance and the crossing estimate.

Run with ``python3 demos/threshold_sweep.py [trials]``; the full-size version
is ``planar-code-lab threshold --config demos/configs/iid_threshold.json``.
"""

import sys

from planar_code_lab.harness import emit, estimate_crossing, parse_config, run_threshold_sweep

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
cfg = parse_config({
    "experiment": "threshold",
    "distances": [3, 5, 7],
    "noise": {"kind": "independent_xz", "p": [0.07, 0.09, 0.11, 0.13]},
    "trials": trials,
    "seed": 11,
})
table = run_threshold_sweep(cfg)
print(emit(table))

for d in cfg.distances:
    rates = "  ".join(f"{r['rate']:.4f}" for r in table.select(d=d))
    print(f"d={d:2d}  {rates}")

est = estimate_crossing(table)
print(f"\ncrossing: p_c ~ {est['p_c']:.4f} (pairs: {', '.join(f'{c:.4f}' for c in est['pairwise'])})")
