"""Pair potentials: evaluation, total energies, and admissibility checks.

Walks through the two built-in interactions (the piecewise-linear hat well
and the truncated-shifted Lennard-Jones) and shows what the admissibility
report looks like for a potential that is *not* stable.
"""

import numpy as np

from cluster_gas import potential as pot

hat = pot.hat_well()
lj = pot.ts_lennard_jones()

print("hat well: v(0.4) =", pot.evaluate(hat, 0.4), "(hard core)")
print("hat well: v(0.75) =", pot.evaluate(hat, 0.75))
print("hat well: v(1.3) =", pot.evaluate(hat, 1.3), "(beyond the range)")

r_star = 2.0 ** (1.0 / 6.0)
print(f"\ntsLJ minimum: v({r_star:.4f}) = {pot.evaluate(lj, r_star):.9f}")

triangle = np.array([[0.0, 0.0], [r_star, 0.0], [r_star / 2, r_star * np.sqrt(3) / 2]])
print("tsLJ equilateral triangle energy:", pot.total_energy(lj, triangle))

print("\nadmissibility checks")
for name, p in (("hat_well", hat), ("ts_lennard_jones", lj), ("square_well (no core)", pot.square_well())):
    rep = pot.validate_potential(p, resolution=1e-3)
    flags = ", ".join(f"{item}={chk.status}" for item, chk in rep.items.items())
    print(f"  {name}: {flags}")
    print(f"    tail width {rep.tail_delta:.3g}, stability constant {rep.stability_constant:.3g}")
