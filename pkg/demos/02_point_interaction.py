"""Bound states and resolvents of point interactions on a ball.

Run with ``python demos/02_point_interaction.py``.
"""
import math

import numpy as np

from deltalab import BallDomain, BoundaryCondition, layered_grid, op_norm_diff, pi_eigenvalue, pi_resolvent, r0

alpha = -1 / (4 * math.pi)
print("whole space  E =", pi_eigenvalue(None, alpha))

# The boundary pushes the eigenvalue up (Dirichlet) or down (Neumann);
# the effect is exponentially small once R is large.
for R in (2.0, 5.0, 10.0):
    for bc in (BoundaryCondition.dirichlet(), BoundaryCondition.neumann()):
        E = pi_eigenvalue(BallDomain(R, bc), alpha)
        print(f"R={R:4.1f} {bc.kind:9s} b={bc.b}  E={E:.10f}")

# alpha = +inf is the free Laplacian; finite alpha is a rank-one update.
D = BallDomain(5.0)
g = layered_grid(0.1, 5.0)
R0 = r0(D, 4.0, g)
for a in (math.inf, 1.0, 0.0, -0.05):
    Ra = pi_resolvent(D, 4.0, a, g, free=R0)
    sv = np.linalg.svd(Ra.matrix - R0.matrix, compute_uv=False)
    print(f"alpha={a:6}  ||R_alpha - R0|| = {op_norm_diff(Ra, R0):.6f}  rank = {int(np.sum(sv > 1e-12))}")
