"""Cluster partition functions: quadrature, tree-proposal Monte Carlo, tables.

The pair integral has a closed form for the hat well, the three-particle
integral a brute-force grid oracle; the tree-proposal estimator reproduces
both and extends to larger clusters.  Free energies f_k = -log(Z_k)/(beta k)
approach their large-k limit from above, and at low temperature they
approach the ground-state energies per particle.
"""

import math

from cluster_gas import groundstate as gs
from cluster_gas import partfun as pf
from cluster_gas import potential as pot

hat = pot.hat_well()
beta, radius = 1.0, 1.1

z2_exact = (math.e**2 - 1.0) / 4.0 + 0.1
print("Z_2 quadrature:", pf.z2_quadrature(hat, beta, radius, 1), " closed form:", z2_exact)

est2 = pf.estimate_zk(hat, 2, beta, radius, 1, 40_000, seed=1)
est3 = pf.estimate_zk(hat, 3, beta, radius, 1, 40_000, seed=2)
print(f"Z_2 tree MC: {est2.value:.4f} +- {est2.stderr:.4f}")
print(f"Z_3 tree MC: {est3.value:.4f} +- {est3.stderr:.4f}  (grid oracle {pf.z3_grid_oracle(hat, beta, radius):.4f})")

table = pf.build_table(hat, beta=3.0, radius=radius, k_max=4, dim=1,
                       samples={3: 20_000, 4: 40_000}, seed=3)
print("\nbeta=3 free energies per particle:")
for k in table.sizes:
    print(f"  f_{k} = {table.f[k]:9.5f} +- {table.stderr_of(k):.5f}")
print(f"  f_inf = {table.f_inf:.5f} (tail: {table.tail.tag if table.tail else 'none'})")

gs_table = gs.build_table(hat, k_max=4, dim=1, restarts=8, iterations=200, seed=4)
rep = pf.low_temperature_check(table, gs_table, beta=3.0)
print(f"\nlow-temperature envelope: smallest C making both bounds hold = {rep.constant:.3f}")

rows = pf.collapse_diagnostic(hat, [1, 2, 3], beta=2.0, c=4.0, radius=radius, dim=1, samples=30_000, seed=5)
print("\nbox-collapse diagnostic (difference log Z_free - log Z_box):")
for row in rows:
    print(f"  k={row.k}: box side {row.box:.1f}, difference {row.difference:.4f}")
