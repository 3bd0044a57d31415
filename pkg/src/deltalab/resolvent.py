"""Discrete resolvents: free, regular potential, point interaction, rank one.

All operators share the conventions of :mod:`deltalab.core`: matrices act on
orthonormal coordinates ``sqrt(w) f`` of the s-wave sector (or of sector
``ell`` where stated), so the spectral norm of a matrix difference is the
discrete L^2 operator norm.

The regular-potential resolvent is assembled from the factorized identity::

    (H0 + V + z)^-1 = R0 - R0 v (1 + u R0 v)^-1 u R0,    R0 = (H0 + z)^-1,

which on the whole space coincides with the ``A_eps (1 + B_eps)^-1 C_eps``
form after the dilation ``x -> eps x``; only this form is implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bsop import newton_transform
from .core import FOUR_PI, KernelOperator, RadialPotential, split_uv
from .errors import (
    ConvergenceError,
    NormalizationError,
    ParameterError,
    PoleError,
    SpectralPointError,
    SupportError,
)
from .greens import (
    admissible_z_min,
    as_point,
    c_alpha,
    correction_l0,
    green_kernel_l,
    point_green,
)

KK_SINGULAR_TOL = 1e-10
NONLOCAL_POLE_TOL = 1e-12


@dataclass(eq=False)
class DiscreteResolvent(KernelOperator):
    """Resolvent matrix with the data it was built from."""

    domain: object = None
    z: float = math.nan
    data: dict = field(default_factory=dict)

    def derived(self, matrix, tag, **data):
        return DiscreteResolvent(matrix, self.grid, self.ell, tag, self.domain, self.z,
                                 {**data})


@dataclass(frozen=True)
class RankOneUpdate:
    """``coefficient |left><right|`` with nodal vectors."""

    left: np.ndarray
    right: np.ndarray
    coefficient: float

    def matrix(self, grid):
        s = grid.sqrt_weights
        return self.coefficient * np.outer(s * self.left, s * self.right)


def r0(domain, z, grid, ell=0):
    """``(-Delta_sigma + z)^-1`` (``domain=None``: ``(-Delta + z)^-1``).

    For Robin conditions with ``b < 0`` the Laplacian has a negative
    eigenvalue and ``z`` must exceed minus that eigenvalue.
    """
    z = as_point(z).z
    if domain is not None and not domain.bc.is_dirichlet and domain.bc.b < 0:
        z_min = admissible_z_min(domain)
        if z <= z_min:
            raise SpectralPointError(
                f"z={z!r} is below the admissible window z > {z_min!r} "
                f"of the Robin ball with b={domain.bc.b!r}"
            )
    op = green_kernel_l(domain, z, grid, ell)
    return DiscreteResolvent(op.matrix, grid, ell, "R0", domain, z, {})


def kk_resolvent(domain, z, V, grid, ell=0, free=None):
    """Resolvent of ``-Delta_sigma + V`` by the factorized resolvent identity.

    ``free`` may pass a precomputed :func:`r0` on the same grid.
    """
    R = free if free is not None else r0(domain, z, grid, ell)
    if domain is not None:
        V.check_inside(domain.radius)
    if V.support > grid.r_max:
        raise SupportError("potential support exceeds the grid")
    u, v = split_uv(V, grid.nodes)
    sup = np.flatnonzero(v)
    if sup.size == 0:
        return R.derived(R.matrix.copy(), "R_V", potential=V.to_dict())
    S0 = R.matrix
    us, vs = u[sup], v[sup]
    bs = np.eye(sup.size) + us[:, None] * S0[np.ix_(sup, sup)] * vs[None, :]
    smin = np.linalg.svd(bs, compute_uv=False)[-1]
    if smin < KK_SINGULAR_TOL:
        raise SpectralPointError(
            f"1 + u R0 v is singular (smallest singular value {smin:.3e}): "
            f"z={R.z!r} lies on the spectrum of -Delta_sigma + V; move z"
        )
    X = np.linalg.solve(bs, us[:, None] * S0[sup, :])
    S = S0 - (S0[:, sup] * vs[None, :]) @ X
    return R.derived(S, "R_V", potential=V.to_dict(), smallest_singular_value=float(smin))


def pi_resolvent(domain, z, alpha, grid, ell=0, free=None):
    """Point-interaction resolvent ``R0 + c |G_z><G_z|``.

    ``c`` is ``c_z(alpha)`` on the ball and ``d_z(alpha)`` on the whole
    space.  The Green function ``G_z`` is radial, so every sector
    ``ell >= 1`` is left untouched.
    """
    R = free if free is not None else r0(domain, z, grid, ell)
    if ell != 0 or math.isinf(alpha):
        return R.derived(R.matrix.copy(), "R_alpha", alpha=alpha, coefficient=0.0)
    c = c_alpha(domain, R.z, alpha)
    g = point_green(domain, R.z, grid.nodes)
    update = RankOneUpdate(g, g, c)
    return R.derived(R.matrix + update.matrix(grid), "R_alpha", alpha=alpha, coefficient=c,
                     update=update)


def _pole_function(domain, alpha):
    def f(kappa):
        return alpha + kappa / FOUR_PI - correction_l0(domain, kappa * kappa).at_origin

    return f


def pi_eigenvalue(domain, alpha, e_max=100.0, n_scan=4000):
    """Lowest negative eigenvalue of the point interaction, or ``None``.

    Negative eigenvalues ``E`` are the zeros of ``alpha + k/(4 pi) - h_{k^2}(0)``
    with ``k = sqrt(-E)``: the pole condition of ``c_z(alpha)`` at ``z = -E``.
    The window is ``-e_max <= E < 0``.
    """
    if math.isinf(alpha) or math.isnan(alpha):
        return None
    f = _pole_function(domain, alpha)
    kmax = math.sqrt(e_max)
    ks = np.geomspace(1e-6 * kmax, kmax, n_scan)
    vals = []
    for k in ks:
        try:
            vals.append(f(k))
        except Exception:  # singular correction: treat as a pole
            vals.append(math.nan)
    vals = np.asarray(vals)
    roots = []
    for i in range(n_scan - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
            continue
        if a == 0:
            roots.append(ks[i])
            continue
        k = brentq(f, ks[i], ks[i + 1], xtol=1e-15, rtol=1e-15)
        # reject sign changes across poles of h_z(0)
        scale = max(1.0, abs(alpha), abs(a), abs(b))
        if abs(f(k)) < 1e-8 * scale and abs(f(k)) < min(abs(a), abs(b)) + 1e-12:
            roots.append(k)
    if not roots:
        return None
    return -max(roots) ** 2


def check_spectral_point(domain, z, alpha=math.inf, tol=1e-6):
    """Raise when ``-z`` is within ``tol`` of a detected point-interaction eigenvalue."""
    E = pi_eigenvalue(domain, alpha) if not math.isinf(alpha) else None
    if E is not None and abs(as_point(z).z + E) < tol:
        raise SpectralPointError(f"z={as_point(z).z!r} is within {tol} of -E = {-E!r}")
    return E


def check_density(rho, tol=1e-10):
    mass = rho.integral()
    if abs(mass - 1.0) > tol:
        raise NormalizationError(f"density integrates to {mass!r}, not 1")
    return mass


def electrostatic_energy(rho, grid):
    """``(rho, (-Delta)^-1 rho)`` for a radial unit-mass density."""
    check_density(rho)
    if rho.support > grid.r_max:
        raise SupportError("density support exceeds the grid")
    f = rho(grid.nodes)
    psi = newton_transform(grid, f, grid.nodes)
    return grid.inner(f, psi)


def a_eps(eps, alpha, ell_energy):
    """Coupling ``-eps/l + alpha eps^2 / l^2`` of the rank-one approximation."""
    if not ell_energy > 0:
        raise ParameterError("electrostatic energy must be positive")
    return -eps / ell_energy + alpha * eps**2 / ell_energy**2


def scaled_density(rho, eps):
    """``rho^eps(x) = eps^-3 rho(x / eps)``."""
    return RadialPotential(rho.profile, rho.coupling / eps**3, rho.dilation * eps)


def nonlocal_resolvent(domain, z, rho, eps, a, grid, free=None):
    """Resolvent of ``-Delta_sigma + a (rho^eps, .) rho^eps``."""
    R = free if free is not None else r0(domain, z, grid)
    dens = scaled_density(rho, eps)
    if domain is not None:
        dens.check_inside(domain.radius)
    f = dens(grid.nodes)
    g = R.apply(f)
    q = grid.inner(f, g)
    if a == 0:
        return R.derived(R.matrix.copy(), "R_H", eps=eps, a=0.0, quadratic_form=q)
    denom = 1.0 / a + q
    if abs(denom) < NONLOCAL_POLE_TOL * max(1.0, abs(q)):
        raise SpectralPointError(f"rank-one denominator vanishes at eps={eps!r}; move z")
    update = RankOneUpdate(g, g, -1.0 / denom)
    return R.derived(R.matrix + update.matrix(grid), "R_H", eps=eps, a=a,
                     quadratic_form=q, denominator=denom, update=update)


def _annulus_index(grid, annulus):
    r1, r2 = annulus
    idx = np.flatnonzero((grid.nodes > r1) & (grid.nodes < r2))
    if idx.size < 3:
        raise ParameterError(f"annulus {annulus!r} contains fewer than 3 grid nodes")
    return idx


def h2_proxy_rows(D, grid, annulus):
    """Rows of the discrete H^2(annulus) proxy of an operator matrix ``D``.

    Output values on annulus nodes are stacked with their first and second
    radial finite differences; every block carries the L^2 weights.
    """
    idx = _annulus_index(grid, annulus)
    t = grid.nodes[idx]
    s = grid.sqrt_weights[idx]
    Y = D[idx] / s[:, None]
    d1 = np.gradient(Y, t, axis=0, edge_order=2)
    d2 = np.gradient(d1, t, axis=0, edge_order=2)
    return np.vstack([s[:, None] * Y, s[:, None] * d1, s[:, None] * d2])


def largest_singular_value(M, tol=1e-8, max_iter=50000):
    """Power iteration on ``M^T M`` from the all-ones vector."""
    if not np.any(M):
        return 0.0
    x = np.ones(M.shape[1]) / math.sqrt(M.shape[1])
    lam_old = 0.0
    for _ in range(max_iter):
        y = M @ x
        lam = float(y @ y)
        x = M.T @ y
        nx = np.linalg.norm(x)
        if nx == 0:
            return 0.0
        x /= nx
        if abs(lam - lam_old) <= tol * lam:
            return math.sqrt(lam)
        lam_old = lam
    raise ConvergenceError("power iteration for the operator norm did not converge",
                           iterate=x)


def op_norm_diff(A, B, restriction=None, h2=False, input_restriction=None, tol=1e-8):
    """Operator norm of ``A - B``.

    ``restriction`` keeps only output radii inside an annulus ``(r1, r2)``;
    with ``h2=True`` the output is measured in the discrete H^2 proxy norm on
    that annulus.  ``input_restriction`` restricts the input side as well.
    """
    if A.grid is not B.grid and not np.array_equal(A.grid.nodes, B.grid.nodes):
        raise ParameterError("operators live on different grids")
    D = A.matrix - B.matrix
    grid = A.grid
    if input_restriction is not None:
        D = D[:, _annulus_index(grid, input_restriction)]
    if h2:
        if restriction is None:
            raise ParameterError("the H^2 proxy needs an annulus")
        M = h2_proxy_rows(D, grid, restriction)
    elif restriction is not None:
        M = D[_annulus_index(grid, restriction)]
    else:
        M = D
    return largest_singular_value(M, tol=tol)


__all__ = [
    "DiscreteResolvent", "RankOneUpdate", "r0", "kk_resolvent", "pi_resolvent",
    "pi_eigenvalue", "check_spectral_point", "electrostatic_energy", "a_eps",
    "scaled_density", "nonlocal_resolvent", "op_norm_diff", "h2_proxy_rows",
    "largest_singular_value", "PoleError",
]
