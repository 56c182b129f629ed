"""Cluster ground states and the zero-temperature chemical potential.

Basin hopping tabulates E_k for the truncated-shifted Lennard-Jones gas in
the plane, the surface-law fit extrapolates the bulk energy per particle,
and mu(nu) = inf_k (E_k - nu)/k maps out which cluster size dominates at a
given dilution nu.
"""

import numpy as np

from cluster_gas import groundstate as gs
from cluster_gas import potential as pot

lj = pot.ts_lennard_jones()
table = gs.build_table(lj, k_max=7, dim=2, restarts=12, iterations=300, seed=42)

print(" k   E_k        E_k/k      excess E_k - k e_bulk")
for k in sorted(table.energies):
    e = table.energies[k]
    print(f"{k:2d}  {e:9.5f}  {e / k:9.5f}  {e - k * table.e_bulk:9.5f}")
print(f"\ne_bulk = {table.e_bulk:.5f} (fit residual {table.e_bulk_residual:.2e})")
print(f"nu_star = {table.nu_star:.5f} at k = {table.nu_star_argmin}")

print("\nmu(nu) and the dominant size:")
for nu in (0.2 * table.nu_star, 1.5 * table.nu_star, 3.0 * table.nu_star):
    point = gs.chemical_potential(table, nu)
    k_desc = "bulk" if point.k_star is None else f"k = {point.k_star}"
    print(f"  nu = {nu:7.4f}: mu = {point.mu:9.5f}, dominant {k_desc}, gap {point.gap:.4f}")

curve = gs.chemical_potential_curve(table, np.linspace(0.05, 4.0, 200))
print(f"\nkinks detected on the nu-grid (resolution {curve.resolution:.3f}):", curve.kinks)

rep = gs.shape_diagnostics(table.witnesses[7], r_min=1.0, c=2.0)
print(f"k=7 witness: min pair distance {rep.min_dist:.4f}, max {rep.max_dist:.4f}")
