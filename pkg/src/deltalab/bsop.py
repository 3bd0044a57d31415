"""Birman-Schwinger operators, resonance tuning and resonance functions.

The Birman-Schwinger operator of ``V = u v`` is ``B0 = u (-Delta)^-1 v``,
with the Newton kernel ``1 / (4 pi |x - y|)``.  On the sector of angular
momentum ``ell`` the kernel is ``r<^ell / ((2 ell + 1) r>^(ell + 1)) / (4 pi)``.
A zero-energy resonance is an eigenvalue ``-1`` of ``B0`` whose eigenfunction
``phi`` has ``<v, phi> != 0``; the coupling of the limiting point interaction
is then ``alpha = -lam / <v, phi>^2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .core import FOUR_PI, KernelOperator, RadialGrid, nystrom_matrix, split_uv
from .errors import (
    ConvergenceError,
    DegeneracyError,
    NoResonanceError,
    OrthogonalResonanceError,
    ParameterError,
)

SIMPLICITY_GAP = 1e-6
OVERLAP_TOL = 1e-8


def newton_kernel(ell=0):
    """Sector-``ell`` kernel of ``(-Delta)^-1`` for the ``4 pi r^2 dr`` measure."""

    def kernel(r, s):
        lo, hi = np.minimum(r, s), np.maximum(r, s)
        if ell == 0:
            return 1.0 / (FOUR_PI * hi)
        return lo**ell / ((2 * ell + 1) * hi ** (ell + 1) * FOUR_PI)

    return kernel


def _symmetrize(S):
    return 0.5 * (S + S.T)


def assemble_b0(V, grid, ell=0, domain=None):
    """Discretized ``u (-Delta)^-1 v`` on ``grid``.

    ``domain`` is only validated (the support must fit inside it): the
    operator never sees the boundary condition.
    """
    if V.support > grid.r_max * (1 + 1e-14):
        raise ParameterError(
            f"potential support {V.support:.6g} exceeds the grid range {grid.r_max:.6g}"
        )
    if domain is not None:
        V.check_inside(domain.radius)
    u, v = split_uv(V, grid.nodes)
    S = _symmetrize(nystrom_matrix(newton_kernel(ell), grid))
    B = u[:, None] * S * v[None, :]
    if np.array_equal(np.abs(u), v) and (np.all(u <= 0) or np.all(u >= 0)):
        B = _symmetrize(B)
    return KernelOperator(B, grid, int(ell), "B0")


@dataclass(eq=False)
class EigenPair:
    """Eigenvalue and L^2-normalized eigenfunction (nodal values)."""

    value: float
    vector: np.ndarray
    residual: float
    second: complex
    grid: RadialGrid
    iterations: int = 0

    def overlap(self, v, ell=0):
        """``<v, phi>`` for a radial ``v``; zero off the s-wave sector."""
        if ell != 0:
            return 0.0
        return self.grid.inner(v, self.vector)

    @property
    def norm(self):
        return self.grid.norm(self.vector)


def _is_symmetric(S):
    return np.max(np.abs(S - S.T)) <= 1e-14 * max(1.0, np.max(np.abs(S)))


def eigen_near(B, target, v=None, max_iter=200, tol=1e-13):
    """Eigenpair of ``B`` nearest ``target`` by shifted inverse iteration.

    The start vector is all ones.  When ``v`` is given the sign is fixed by
    ``<v, phi> >= 0``.  The second-nearest eigenvalue is returned as well,
    for simplicity checks.
    """
    S = B.matrix
    n = S.shape[0]
    scale = max(1.0, float(np.linalg.norm(S, ord="fro")))
    shift = float(target)
    lu = None
    for _ in range(4):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            lu = lu_factor(S - shift * np.eye(n), check_finite=False)
        if np.min(np.abs(np.diag(lu[0]))) > 1e-15 * scale:
            break
        shift += 1e-10 * (1.0 + abs(shift))
        lu = None
    if lu is None:
        raise ConvergenceError(f"factorization of B - {target} I broke down after 3 shifts")

    x = np.ones(n) / math.sqrt(n)
    mu, res = shift, math.inf
    for it in range(1, max_iter + 1):
        y = lu_solve(lu, x, check_finite=False)
        x = y / np.linalg.norm(y)
        Sx = S @ x
        mu = float(x @ Sx)
        res = float(np.linalg.norm(Sx - mu * x))
        if res <= tol * scale:
            break
    if res > 1e-8:
        raise ConvergenceError(
            f"inverse iteration did not converge (residual {res:.3e})", res, x
        )

    evals = np.linalg.eigvalsh(S) if _is_symmetric(S) else np.linalg.eigvals(S)
    order = np.argsort(np.abs(evals - mu))
    second = evals[order[1]] if n > 1 else np.nan
    if np.iscomplexobj(second) and abs(second.imag) < 1e-12:
        second = second.real

    phi = x / B.grid.sqrt_weights
    if v is not None:
        if B.grid.inner(v, phi) < 0:
            phi = -phi
    elif phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    return EigenPair(mu, phi, res, second, B.grid, it)


@dataclass(eq=False)
class ResonanceData:
    """Result of tuning the coupling so that ``-1`` is an eigenvalue of ``B0``."""

    coupling: float
    pair: EigenPair
    overlap: float
    gap: float
    potential: object
    grid: RadialGrid
    simple: bool = True
    experimental: bool = False

    def alpha(self, lam):
        return coupling_to_alpha(lam, self)

    def to_dict(self, lams=(0.0, 1.0)):
        out = {
            "theta_star": self.coupling,
            "eigenvalue": self.pair.value,
            "residual": self.pair.residual,
            "gap": self.gap,
            "simple": self.simple,
            "experimental": self.experimental,
            "overlap": self.overlap,
            "potential": self.potential.to_dict(),
            "grid_size": self.grid.size,
        }
        if self.simple and abs(self.overlap) > 0:
            out["alpha"] = {repr(float(l)): coupling_to_alpha(l, self) for l in lams}
        return out


def most_negative_eigenvalue(B):
    S = B.matrix
    if _is_symmetric(S):
        return float(np.linalg.eigvalsh(S)[0])
    ev = np.linalg.eigvals(S)
    real = ev[np.abs(ev.imag) < 1e-10].real
    return float(real.min()) if real.size else math.inf


def tune_resonance(V, grid, domain=None):
    """Coupling ``theta*`` with ``-1`` the lowest eigenvalue of ``B0(theta* V)``.

    Uses the exact linearity ``B0(theta V) = theta B0(V)``:
    ``theta* = -1 / mu_1`` with ``mu_1`` the most negative eigenvalue at unit
    coupling.
    """
    unit = V.with_coupling(1.0)
    mu1 = most_negative_eigenvalue(assemble_b0(unit, grid, domain=domain))
    if not mu1 < 0:
        raise NoResonanceError(
            f"B0 has no negative eigenvalue (most negative {mu1:.3e}); "
            "no attractive coupling produces a resonance"
        )
    theta = -1.0 / mu1
    tuned = V.with_coupling(theta)
    experimental = not tuned.sign_definite
    if experimental:
        warnings.warn("mixed-sign potential: resonance tuning is experimental", stacklevel=2)
    _, v = split_uv(tuned, grid.nodes)
    pair = eigen_near(assemble_b0(tuned, grid, domain=domain), -1.0, v=v)
    overlap = pair.overlap(v)
    gap = float(abs(pair.second + 1.0))
    return ResonanceData(theta, pair, overlap, gap, tuned, grid,
                         simple=gap > SIMPLICITY_GAP, experimental=experimental)


def coupling_to_alpha(lam, res):
    """``alpha = -lam |<v, phi>|^-2``."""
    if not res.simple:
        raise DegeneracyError(f"eigenvalue -1 is not simple (gap {res.gap:.3e})")
    _, v = split_uv(res.potential, res.grid.nodes)
    if abs(res.overlap) < OVERLAP_TOL * res.grid.norm(v):
        raise OrthogonalResonanceError(
            "resonant eigenfunction is orthogonal to v: the limit is the free operator"
        )
    return -float(lam) / res.overlap**2 + 0.0


def newton_transform(grid, g, r_out):
    """``int g(y) / (4 pi |x - y|) dy`` at radii ``r_out`` for radial ``g``."""
    r_out = np.atleast_1d(np.asarray(r_out, dtype=float))
    s = grid.nodes
    C = grid.cumulative_matrix(r_out)
    inner = C @ (g * s**2)
    outer = np.dot(grid.raw_weights, g * s) - C @ (g * s)
    return inner / r_out + outer


@dataclass(eq=False)
class ResonanceProfile:
    r: np.ndarray
    psi: np.ndarray
    tail_constant: float
    overlap: float

    @property
    def defect(self):
        return abs(self.tail_constant - self.overlap)

    def tail_law(self):
        """``4 pi r psi(r)`` at every sample."""
        return FOUR_PI * self.r * self.psi


def resonance_profile(res, V=None, r_out=None, phi=None):
    """Resonance function ``psi = (-Delta)^-1 (v phi)`` sampled at ``r_out``.

    Outside the support ``4 pi r psi(r)`` equals ``<v, phi>``; a nonzero tail
    constant means ``psi`` decays like the Green function and is not square
    integrable.  ``phi`` replaces the resonant eigenfunction (nodal values
    on ``res.grid``), which is how the orthogonal case is probed.
    """
    V = res.potential if V is None else V
    phi = res.pair.vector if phi is None else np.asarray(phi, dtype=float)
    grid = res.grid
    if r_out is None:
        r_out = np.linspace(0.05, 10.0, 200) * V.support
    r_out = np.asarray(r_out, dtype=float)
    if r_out.max() <= V.support:
        raise ParameterError("r_out must extend beyond the support of V")
    _, v = split_uv(V, grid.nodes)
    g = v * phi
    psi = newton_transform(grid, g, r_out)
    i = int(np.argmax(r_out))
    tau = FOUR_PI * r_out[i] * psi[i]
    return ResonanceProfile(r_out, psi, float(tau), grid.inner(v, phi))


def resonance_residual(res, samples=4):
    """Relative size of ``-Delta psi + V psi`` inside the support.

    ``psi`` is sampled on each panel of the resonance grid, ``r psi`` is
    fitted by a Legendre series of the panel order and differentiated twice
    (``-Delta psi = -(r psi)'' / r``); the maximum residual is divided by
    ``max |V psi|``.  ``samples`` interior points per node are checked.
    """
    V, grid = res.potential, res.grid
    _, v = split_uv(V, grid.nodes)
    g = v * res.pair.vector
    p = grid.order
    worst, scale = 0.0, 0.0
    for k in range(grid.n_panels):
        a, b = grid.breaks[k], grid.breaks[k + 1]
        if a >= V.support:
            break
        t = grid.nodes[k * p : (k + 1) * p]
        fit = np.polynomial.Legendre.fit(t, t * newton_transform(grid, g, t), p - 1,
                                         domain=[a, b])
        x = np.linspace(a, b, samples * p + 2)[1:-1]
        psi = newton_transform(grid, g, x)
        lap = -fit.deriv(2)(x) / x
        vpsi = V(x) * psi
        worst = max(worst, float(np.max(np.abs(lap + vpsi))))
        scale = max(scale, float(np.max(np.abs(vpsi))))
    return worst / scale


@dataclass
class LocalizationReport:
    kernel_discrepancy: float
    eigenvalue_discrepancy: float
    spectrum_discrepancy: float
    outside_mass: float
    resonance_discrepancy: float = 0.0


def extend_grid(grid, factor=3.0, panels=8):
    """Grid with extra geometric panels from ``r_max`` to ``factor * r_max``."""
    extra = np.geomspace(grid.r_max, factor * grid.r_max, panels + 1)[1:]
    return RadialGrid.from_breaks(np.concatenate([grid.breaks, extra]), grid.order)


def _nonzero_spectrum(S):
    ev = np.linalg.eigvalsh(S) if _is_symmetric(S) else np.sort(np.linalg.eigvals(S).real)
    cut = 1e-12 * max(1.0, np.max(np.abs(ev)))
    return np.sort(ev[np.abs(ev) > cut])


def verify_localization(res, factor=3.0):
    """Compare ``B0`` on the resonance grid with ``B0`` on an extended grid."""
    V, grid = res.potential, res.grid
    ext = extend_grid(grid, factor)
    B = assemble_b0(V, grid)
    Bt = assemble_b0(V, ext)
    _, v = split_uv(V, grid.nodes)
    inside = np.flatnonzero(v != 0)
    kernel = float(np.max(np.abs(B.matrix[np.ix_(inside, inside)]
                                 - Bt.matrix[np.ix_(inside, inside)])))
    a, b = _nonzero_spectrum(B.matrix), _nonzero_spectrum(Bt.matrix)
    spectrum = float(np.max(np.abs(a - b))) if a.size == b.size else math.inf
    _, vt = split_uv(V, ext.nodes)
    pair = eigen_near(Bt, -1.0, v=vt)
    outside = vt == 0
    mass = math.sqrt(float(np.sum(ext.weights[outside] * pair.vector[outside] ** 2)))
    reference = eigen_near(B, -1.0, v=v)
    return LocalizationReport(
        kernel_discrepancy=kernel,
        eigenvalue_discrepancy=abs(pair.value - reference.value),
        spectrum_discrepancy=spectrum,
        outside_mass=mass,
        resonance_discrepancy=abs(pair.value - res.pair.value),
    )
