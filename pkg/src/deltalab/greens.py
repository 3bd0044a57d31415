"""Green functions of the Laplacian on the ball and on R^3.

Kernels are the angular-momentum components of ``(-Delta_sigma + z)^-1``
acting on ``L^2((0, R), 4 pi r^2 dr)``.  For ``ell = 0``::

    G(r, s) = sinh(k r<) exp(-k r>) / (4 pi k r s)  +  A sinh(k r) sinh(k s) / (k r s)

with ``k = sqrt(z)``; the second term is the boundary correction, and
``A sinh(k r) / r`` is the correction ``h_z`` of the Green function with
pole at the origin.  ``domain=None`` stands for the whole space (``A = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import spherical_in, spherical_kn

from .core import FOUR_PI, KernelOperator, nystrom_matrix
from .errors import ParameterError, PoleError, SingularCorrectionError

DENOMINATOR_TOL = 1e-14


@dataclass(frozen=True)
class SpectralPoint:
    """Real spectral shift ``z > 0``; ``kappa = sqrt(z)``."""

    z: float

    def __post_init__(self):
        if not (self.z > 0 and math.isfinite(self.z)):
            raise ParameterError(f"spectral shift must be a positive real, got {self.z!r}")
        object.__setattr__(self, "z", float(self.z))

    @property
    def kappa(self):
        return math.sqrt(self.z)


def as_point(z):
    return z if isinstance(z, SpectralPoint) else SpectralPoint(z)


def free_gamma(z, r):
    """``exp(-sqrt(z) r) / (4 pi r)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("free_gamma needs r > 0")
    k = as_point(z).kappa
    return np.exp(-k * r) / (FOUR_PI * r)


def _sinhc(k, r):
    """``sinh(k r) / r`` with the limit ``k`` at ``r = 0``."""
    r = np.asarray(r, dtype=float)
    x = k * r
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, r)
    return np.where(small, k * (1 + x * x / 6), np.sinh(x) / safe)


@dataclass(frozen=True)
class CorrectionL0:
    """``h_z(r) = coefficient * sinh(kappa r) / r``."""

    coefficient: float
    kappa: float

    def __call__(self, r):
        return self.coefficient * _sinhc(self.kappa, r)

    @property
    def at_origin(self):
        return self.coefficient * self.kappa

    def derivative(self, r):
        k, r = self.kappa, np.asarray(r, dtype=float)
        return self.coefficient * (k * np.cosh(k * r) / r - np.sinh(k * r) / r**2)


def correction_l0(domain, z):
    """Boundary correction ``h_z`` for the pole at the origin."""
    k = as_point(z).kappa
    if domain is None:
        return CorrectionL0(0.0, k)
    R = domain.radius
    kr = k * R
    if domain.bc.is_dirichlet:
        # -exp(-kR) / (4 pi sinh kR), written without overflow
        A = -2.0 * math.exp(-2 * kr) / (FOUR_PI * -math.expm1(-2 * kr))
        return CorrectionL0(A, k)
    gamma = domain.robin_coefficient - 1.0 / R
    denom = k + gamma * math.tanh(kr)
    if abs(denom) < DENOMINATOR_TOL * max(1.0, k, abs(gamma)):
        raise SingularCorrectionError(as_point(z).z, domain.bc.b, denom)
    # (k - gamma) e^{-kR} / (4 pi cosh(kR) denom)
    A = (k - gamma) * 2.0 * math.exp(-2 * kr) / (1 + math.exp(-2 * kr)) / (FOUR_PI * denom)
    return CorrectionL0(A, k)


def point_green(domain, z, r):
    """Green function with pole at the origin, ``Gamma_z(r) + h_z(r)``."""
    return free_gamma(z, r) + correction_l0(domain, z)(r)


def boundary_residual(domain, z):
    """``sigma(Gamma_z + h_z)`` at ``r = R``, evaluated from the 3-d formulas."""
    k = as_point(z).kappa
    R = domain.radius
    h = correction_l0(domain, z)
    value = math.exp(-k * R) / (FOUR_PI * R) + float(h(R))
    if domain.bc.is_dirichlet:
        return value
    dgamma = -math.exp(-k * R) * (k * R + 1) / (FOUR_PI * R**2)
    return dgamma + float(h.derivative(R)) + domain.robin_coefficient * value


def green_l0(domain, z, r, s):
    """``ell = 0`` Green kernel at arbitrary points (broadcasting)."""
    k = as_point(z).kappa
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    lo, hi = np.minimum(r, s), np.maximum(r, s)
    free = 0.5 * (np.exp(-k * (hi - lo)) - np.exp(-k * (hi + lo))) / (FOUR_PI * k * r * s)
    if domain is None:
        return free
    A = correction_l0(domain, z).coefficient
    return free + A * _sinhc(k, r) * _sinhc(k, s) / k


def _k_tilde(ell, x, derivative=False):
    return (2.0 / math.pi) * spherical_kn(ell, x, derivative=derivative)


def sector_coefficient(domain, z, ell):
    """Weight ``C`` of ``i_ell(k r) i_ell(k s)`` in the ball correction."""
    if domain is None:
        return 0.0
    k = as_point(z).kappa
    x = k * domain.radius
    if domain.bc.is_dirichlet:
        return -_k_tilde(ell, x) / spherical_in(ell, x)
    beta = domain.robin_coefficient
    num = k * _k_tilde(ell, x, True) + beta * _k_tilde(ell, x)
    den = k * spherical_in(ell, x, derivative=True) + beta * spherical_in(ell, x)
    if abs(den) < DENOMINATOR_TOL * max(1.0, abs(k * spherical_in(ell, x, derivative=True))):
        raise SingularCorrectionError(as_point(z).z, domain.bc.b, den)
    return -num / den


def green_ell(domain, z, ell, r, s):
    """Sector-``ell`` Green kernel from modified spherical Bessel functions."""
    if ell < 0:
        raise ParameterError("angular momentum must be >= 0")
    k = as_point(z).kappa
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    lo, hi = np.minimum(r, s), np.maximum(r, s)
    # i_l(k lo) k_l(k hi) decays like exp(-k (hi - lo)); evaluate the product directly
    val = k * spherical_in(ell, k * lo) * _k_tilde(ell, k * hi) / FOUR_PI
    if domain is not None:
        C = sector_coefficient(domain, z, ell)
        val = val + C * k * spherical_in(ell, k * r) * spherical_in(ell, k * s) / FOUR_PI
    return val


def _check_grid(domain, grid):
    if domain is not None and grid.r_max > domain.radius * (1 + 1e-14):
        raise ParameterError(
            f"grid extends to {grid.r_max:.6g}, beyond the ball radius {domain.radius:.6g}"
        )


def green_kernel_l0(domain, z, grid):
    """Discretized ``(-Delta_sigma + z)^-1`` on the s-wave sector."""
    _check_grid(domain, grid)
    correction_l0(domain, z)  # surfaces singular corrections early
    S = nystrom_matrix(lambda r, s: green_l0(domain, z, r, s), grid)
    return KernelOperator(S, grid, 0, "R0")


def green_kernel_l(domain, z, grid, ell):
    """Discretized resolvent on the sector of angular momentum ``ell``."""
    _check_grid(domain, grid)
    if ell == 0:
        return green_kernel_l0(domain, z, grid)
    S = nystrom_matrix(lambda r, s: green_ell(domain, z, ell, r, s), grid)
    return KernelOperator(S, grid, int(ell), f"R0[l={ell}]")


def c_alpha(domain, z, alpha):
    """``(alpha + sqrt(z)/(4 pi) - h_z(0))^-1``; zero for ``alpha = inf``."""
    if math.isinf(alpha):
        if alpha < 0:
            raise ParameterError("alpha = -inf is not a point interaction")
        return 0.0
    denom = alpha + as_point(z).kappa / FOUR_PI - correction_l0(domain, z).at_origin
    if abs(denom) < DENOMINATOR_TOL * max(1.0, abs(alpha)):
        raise PoleError(
            f"z={as_point(z).z!r} is an eigenvalue shift of the point interaction "
            f"with alpha={alpha!r}; move z"
        )
    return 1.0 / denom


def d_alpha(z, alpha):
    """Free-space coefficient ``(alpha + sqrt(z)/(4 pi))^-1``."""
    return c_alpha(None, z, alpha)


def lowest_laplacian_eigenvalue(domain):
    """Lowest eigenvalue of ``-Delta_sigma`` on the ball (an s-wave state)."""
    R = domain.radius
    if domain.bc.is_dirichlet:
        return (math.pi / R) ** 2
    b = domain.bc.b
    gamma = domain.robin_coefficient - 1.0 / R
    if b == 0:
        return 0.0
    if b < 0:
        # q coth(qR) = -gamma, q > 0
        f = lambda q: q / math.tanh(q * R) + gamma
        hi = max(1.0, -gamma) * 2.0
        while f(hi) < 0:
            hi *= 2
        q = brentq(f, 1e-12 / R, hi, xtol=1e-15, rtol=1e-15)
        return -q * q
    f = lambda k: k * math.cos(k * R) + gamma * math.sin(k * R)
    k = brentq(f, 1e-12 / R, math.pi / R, xtol=1e-15, rtol=1e-15)
    return k * k


def admissible_z_min(domain):
    """Infimum of admissible shifts: ``z`` must exceed minus the bottom of the spectrum."""
    if domain is None:
        return 0.0
    return max(0.0, -lowest_laplacian_eigenvalue(domain))
