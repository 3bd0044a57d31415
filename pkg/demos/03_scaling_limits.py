"""Scaled potentials approaching point interactions.

Sweeps eps for a resonant and a detuned well on a Dirichlet ball and prints
the distances to the point-interaction and free resolvents.  Also runs the
rank-one (non-local) scheme with the right and a wrong coupling law.

Run with ``python demos/03_scaling_limits.py``.
"""
import math

from deltalab import (
    BallDomain,
    RadialPotential,
    SquareWell,
    build_graded_grid,
    sweep_local,
    sweep_nonlocal,
    tune_resonance,
)

EPS = (0.2, 0.1, 0.05, 0.025, 0.0125)
D = BallDomain(5.0)
res = tune_resonance(RadialPotential(SquareWell()), build_graded_grid(40, 10, 1.0, 1 / 40))


def show(title, rep):
    print(f"\n{title}  (target: {rep.meta['target']})")
    print("   eps      |R-target|   |R-other|   annulus L2")
    for row in rep.rows:
        print(f"  {row.eps:7.4f}  {row.norm_l0:11.4e}  {row.norm_alt:10.4e}  {row.norm_ann_l2:11.4e}")
    print(f"  fitted slope {rep.slope:.3f}, R^2 {rep.r2:.4f}")


show("resonant, lam=1", sweep_local(D, res.potential, 1.0, EPS, 1.0, resonance=res))
show("detuned, theta*/2",
     sweep_local(D, res.potential.with_coupling(res.coupling / 2), 0.0, EPS, 1.0, resonance=res))

rho = RadialPotential(SquareWell(depth=3 / (4 * math.pi)))   # unit mass
alpha = -1 / (4 * math.pi)
rep = sweep_nonlocal(D, rho, alpha, EPS, 4.0)
show("rank one, a = -eps/l + alpha eps^2/l^2", rep)
print("  scalar gap:", ", ".join(f"{r.scalar_gap:.3e}" for r in rep.rows))
show("rank one, a = -eps^2/l", sweep_nonlocal(D, rho, alpha, EPS, 4.0, scaling="wrong"))
