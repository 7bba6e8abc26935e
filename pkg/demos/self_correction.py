"""Energy barriers and thermal lifetimes: 1D chain, 2D Ising and the toric code."""

import numpy as np

from planar_code_lab import thermal

print("energy barriers of the canonical flip paths (J = 1)")
for L in (8, 16, 32):
    chain = thermal.ising_1d(L)
    plane = thermal.ising_2d(L)
    toric = thermal.toric_code(L)
    print(
        f"L={L:2d}  chain end {thermal.barrier(chain, thermal.chain_sweep_path(L)):4.0f}"
        f"  chain bulk {thermal.barrier(chain, thermal.chain_sweep_path(L, L // 2)):4.0f}"
        f"  2D raster {thermal.barrier(plane, thermal.raster_path(L)):5.0f}"
        f"  toric loop {thermal.barrier(toric, thermal.toric_loop_path(L)):4.0f}"
    )


def median_lifetime(make, beta, trials=60, horizon=2.0**20):
    times = [thermal.lifetime_trial(make(), beta, seed, horizon).time for seed in range(trials)]
    return float(np.median(times))


print("\nmedian lifetimes")
for L in (16, 32, 64):
    print(f"1D ring     L={L:2d}  beta J=2.0   {median_lifetime(lambda: thermal.ising_1d(L, periodic=True), 2.0):10.4g}")
for L in (4, 8, 12):
    # just inside the ordered phase, where lifetimes still fit the horizon
    print(f"2D Ising    L={L:2d}  beta J=0.5   {median_lifetime(lambda: thermal.ising_2d(L), 0.5, trials=40):10.4g}")
for L in (8, 16, 24):
    print(f"toric code  L={L:2d}  beta J=2.0   {median_lifetime(lambda: thermal.toric_code(L), 2.0, horizon=2.0**16):10.4g}")
