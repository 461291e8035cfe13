#!/usr/bin/env python3
"""Slit-disk convergence table: bulk-energy error and tip-intensity error
of the singular-field case across tip mesh sizes.

The exact values are closed-form: bulk = kappa^2 = 1 on the unit disk.
"""

import argparse
import time

from quasicrack.cases import mode3_datum, slit_disk_crack, slit_disk_domain
from quasicrack.geometry import crack_tips
from quasicrack.mesh import triangulate
from quasicrack.sif import fit_sif
from quasicrack.solver import bulk_energy, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--levels", type=int, nargs="+", default=[64, 128, 256, 512],
        help="h_tip denominators",
    )
    args = ap.parse_args()

    domain = slit_disk_domain(128)
    crack = slit_disk_crack()
    tip = crack_tips(crack)[1]
    g = mode3_datum(1.0)

    print(f"{'h_tip':>8} {'nodes':>7} {'bulk':>9} {'err%':>7} {'kappa':>8} {'err%':>7} {'sec':>6}")
    for denom in args.levels:
        h_tip = 1.0 / denom
        t0 = time.perf_counter()
        mesh = triangulate(domain, crack, 32.0 * h_tip, h_tip)
        u = solve(mesh, g)
        e = bulk_energy(u)
        est = fit_sif(u, tip, 16.0 * h_tip, min(64.0 * h_tip, 0.9))
        dt = time.perf_counter() - t0
        print(
            f"   1/{denom:<4} {mesh.n_nodes:>7} {e:>9.5f} {abs(e - 1) * 100:>6.2f}% "
            f"{est.kappa:>8.4f} {abs(est.kappa - 1) * 100:>6.2f}% {dt:>6.2f}"
        )


if __name__ == "__main__":
    main()
