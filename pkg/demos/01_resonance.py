"""Tuning a square well to a zero-energy resonance.

Run with ``python demos/01_resonance.py``.
"""
import math

import numpy as np

from deltalab import RadialPotential, SquareWell, build_graded_grid, resonance_profile, tune_resonance

# A unit square well on a graded grid: 40 panels, 10 nodes each.
V = RadialPotential(SquareWell(depth=-1.0, radius=1.0))
grid = build_graded_grid(40, 10, 1.0, 1.0 / 40)
res = tune_resonance(V, grid)

print(f"theta*          = {res.coupling:.12f}")
print(f"(pi/2)^2        = {math.pi**2 / 4:.12f}")
print(f"gap to next eig = {res.gap:.3f}")

# The coupling of the limiting point interaction for a few lambdas.
for lam in (-1.0, 0.0, 1.0, 2.0):
    print(f"lam={lam:+.1f}  alpha={res.alpha(lam):+.6f}")

# Outside the well 4 pi r psi(r) is constant: psi decays like 1/r and
# is not square integrable.
r = np.array([1.5, 3.0, 10.0, 100.0])
prof = resonance_profile(res, r_out=r)
print("4 pi r psi(r):", np.array2string(prof.tail_law(), precision=12))
print("<v, phi>     :", f"{prof.overlap:.12f}")
