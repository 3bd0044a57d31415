"""Independent reference computations used by the tests.

None of these import the package's kernels: they are closed forms or a
plain finite-difference solver of the radial equation.
"""

import math

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import spsolve

FOUR_PI = 4 * math.pi


def square_well_theta_star(a):
    """Zero-energy s-wave resonance of ``-theta 1_{r<a}``: ``sqrt(theta) a = pi/2``."""
    return (math.pi / (2 * a)) ** 2


def square_well_alpha(lam):
    """``-lam/<v,phi>^2`` for the resonant unit square well.

    At resonance ``phi = u psi`` with ``psi = sin(k r)/r`` inside, so with
    ``k = pi/2`` and L^2 normalization ``<v, phi>^2 = 64 / (2 pi)``.
    """
    return -lam * math.pi / 32


def free_pi_eigenvalue(alpha):
    return -(FOUR_PI * alpha) ** 2


def dirichlet_pi_pole(alpha, R):
    """Root ``k`` of ``alpha + k/(4 pi) + exp(-kR)/(4 pi sinh kR) * k = 0``."""
    from scipy.optimize import brentq

    def f(k):
        q = math.exp(-2 * k * R)
        return alpha + k / FOUR_PI + 2 * k * q / (1 - q) / FOUR_PI

    return brentq(f, 1e-3, 100.0, xtol=1e-15)


def uniform_ball_energy(a):
    """``(rho, (-Delta)^-1 rho)`` of the unit-mass uniform ball, ``1/(4 pi) * 6/(5a)``."""
    return 3 / (10 * math.pi * a)


def uniform_ball_yukawa(a, z, R=None):
    """``(rho, (-Delta_D + z)^-1 rho)`` for the uniform ball of radius ``a``.

    Free part from the Yukawa potential of the ball; with ``R`` the Dirichlet
    correction ``A sinh(kr) sinh(ks)/(k r s)`` is added.
    """
    k = math.sqrt(z)
    rho0 = 3 / (FOUR_PI * a**3)
    # int_0^a sinh(kr)/r 4 pi r^2 dr
    s_int = FOUR_PI * (a * math.cosh(k * a) / k - math.sinh(k * a) / k**2)
    q = rho0 / z * (1 - (1 + k * a) * math.exp(-k * a) * rho0 * s_int / k)
    if R is not None:
        A = -math.exp(-k * R) / (FOUR_PI * math.sinh(k * R))
        q += A / k * (rho0 * s_int) ** 2
    return q


def dirichlet_h0(z, R):
    k = math.sqrt(z)
    return -k * math.exp(-k * R) / (FOUR_PI * math.sinh(k * R))


def bvp_constant_dirichlet(z, R, r):
    """Solution of ``(-Delta + z) psi = 1`` on the ball with ``psi(R) = 0``."""
    k = math.sqrt(z)
    return 1 / z - R * np.sinh(k * r) / (z * r * math.sinh(k * R))


def bvp_r2_robin(z, R, beta, r):
    """``(-Delta + z) psi = r^2`` with ``psi' + beta psi = 0`` at ``R``.

    Particular part ``r^2/z + 6/z^2`` plus ``C sinh(kr)/r``.
    """
    k = math.sqrt(z)
    p = lambda t: t * t / z + 6 / z**2
    dp = lambda t: 2 * t / z
    s = lambda t: math.sinh(k * t) / t
    ds = lambda t: k * math.cosh(k * t) / t - math.sinh(k * t) / t**2
    C = -(dp(R) + beta * p(R)) / (ds(R) + beta * s(R))
    return r * r / z + 6 / z**2 + C * np.sinh(k * r) / r


def i1(x):
    return (x * np.cosh(x) - np.sinh(x)) / x**2


def k1_tilde(x):
    return np.exp(-x) * (1 + x) / x**2


def green_l1_free(z, r, s):
    k = math.sqrt(z)
    lo, hi = np.minimum(r, s), np.maximum(r, s)
    return k * i1(k * lo) * k1_tilde(k * hi) / FOUR_PI


def fd_radial_resolvent(V, z, f, R, n, beta=None):
    """Solve ``(-Delta + V + z) psi = f`` on ``(0, R)`` by central differences.

    Works with ``u = r psi``: ``-u'' + (V + z) u = r f``, ``u(0) = 0``, and
    ``u(R) = 0`` (Dirichlet) or ``u'(R) + (beta - 1/R) u(R) = 0`` (Robin,
    ghost-point closure).  Returns the radii and ``psi``.
    """
    h = R / n
    r = h * np.arange(1, n + 1)
    q = V(r) + z
    main = 2 / h**2 + q
    off = -np.ones(n - 1) / h**2
    rhs = r * f(r)
    if beta is None:
        r, main, off, rhs = r[:-1], main[:-1], off[:-1], rhs[:-1]
        A = diags([off, main, off], [-1, 0, 1], format="csc")
    else:
        g = beta - 1 / R
        lower = off.copy()
        lower[-1] = -2 / h**2
        main = main.copy()
        main[-1] += 2 * g / h
        A = diags([lower, main, off], [-1, 0, 1], format="csc")
    u = spsolve(A, rhs)
    return r, u / r


def fd_richardson(V, z, f, R, n, targets, beta=None):
    """Richardson-extrapolated finite-difference solution at ``targets``."""
    r1, p1 = fd_radial_resolvent(V, z, f, R, n, beta)
    r2, p2 = fd_radial_resolvent(V, z, f, R, 2 * n, beta)
    a = np.interp(targets, r1, p1)
    b = np.interp(targets, r2, p2)
    return (4 * b - a) / 3


def jacobi_svd_max(M, sweeps=60):
    """Largest singular value by one-sided Jacobi rotations (Hestenes)."""
    U = np.array(M, dtype=float, copy=True)
    n = U.shape[1]
    for _ in range(sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                a = U[:, i] @ U[:, i]
                b = U[:, j] @ U[:, j]
                c = U[:, i] @ U[:, j]
                if abs(c) <= 1e-15 * math.sqrt(a * b):
                    continue
                off = max(off, abs(c) / math.sqrt(a * b))
                zeta = (b - a) / (2 * c)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1 + zeta * zeta))
                cs = 1 / math.sqrt(1 + t * t)
                sn = cs * t
                ui, uj = U[:, i].copy(), U[:, j].copy()
                U[:, i] = cs * ui - sn * uj
                U[:, j] = sn * ui + cs * uj
        if off < 1e-14:
            break
    return float(np.max(np.linalg.norm(U, axis=0)))
