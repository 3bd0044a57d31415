"""Point interactions on a ball as limits of scaled short-range potentials.

Submodules
----------
core
    Domains, boundary conditions, radial grids, potentials, Nystrom assembly.
greens
    Green functions of the Laplacian on the ball and on R^3.
bsop
    Birman-Schwinger operators, resonance tuning, resonance functions.
resolvent
    Free, regular-potential, point-interaction and rank-one resolvents.
convlab
    Scaling sweeps and rate fits.
cli
    The ``deltalab`` command.
"""

from .bsop import (
    ResonanceData,
    assemble_b0,
    coupling_to_alpha,
    eigen_near,
    resonance_profile,
    resonance_residual,
    tune_resonance,
    verify_localization,
)
from .convlab import (
    ConvergenceReport,
    GridSpec,
    fit_rate,
    sector_check,
    sweep_free,
    sweep_local,
    sweep_nonlocal,
)
from .core import (
    BallDomain,
    BoundaryCondition,
    PointInteractionStrength,
    RadialGrid,
    RadialPotential,
    ScalingFamily,
    SquareWell,
    Tabulated,
    TruncatedGaussian,
    build_graded_grid,
    layered_grid,
    scale_potential,
)
from .errors import DeltalabError
from .greens import c_alpha, correction_l0, green_kernel_l, green_kernel_l0, point_green
from .resolvent import (
    a_eps,
    electrostatic_energy,
    kk_resolvent,
    nonlocal_resolvent,
    op_norm_diff,
    pi_eigenvalue,
    pi_resolvent,
    r0,
)

__version__ = "0.1.0"
