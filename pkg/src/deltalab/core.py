"""Domains, radial potentials, scaling and panel quadrature.

Everything in the package lives in the s-wave (or a fixed angular momentum)
sector of L^2 on a ball centred at the interaction point.  Radial functions
are sampled on the nodes of a :class:`RadialGrid`, whose weights already
contain the measure ``4 pi r^2``.  Integral operators are stored as
:class:`KernelOperator` objects holding the matrix in *orthonormal
coordinates* ``sqrt(w_i) f(r_i)``, so Euclidean norms and spectral norms of
the stored matrices are discrete L^2 norms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .errors import ParameterError, SupportError

FOUR_PI = 4.0 * math.pi


# ---------------------------------------------------------------------------
# boundary conditions and domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryCondition:
    """Homogeneous boundary condition on the sphere ``r = R``.

    ``kind`` is ``"dirichlet"`` or ``"robin"``.  A Robin condition reads
    ``d_r psi + (b / R) psi = 0``: ``b`` is dimensionless, measured in units
    of ``1/R``.  Neumann is the Robin condition with ``b = 0``.
    """

    kind: str
    b: float | None = None

    def __post_init__(self):
        if self.kind == "dirichlet":
            if self.b is not None:
                raise ParameterError("a Dirichlet condition carries no parameter")
        elif self.kind == "robin":
            if self.b is None or not math.isfinite(self.b):
                raise ParameterError("a Robin condition needs a finite real b")
            object.__setattr__(self, "b", float(self.b))
        else:
            raise ParameterError(f"unknown boundary condition {self.kind!r}")

    @classmethod
    def dirichlet(cls):
        return cls("dirichlet")

    @classmethod
    def robin(cls, b):
        return cls("robin", b)

    @classmethod
    def neumann(cls):
        return cls("robin", 0.0)

    @property
    def is_dirichlet(self):
        return self.kind == "dirichlet"

    def to_dict(self):
        if self.is_dirichlet:
            return {"kind": "dirichlet"}
        return {"kind": "robin", "b": self.b}

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == "neumann":
            return cls.neumann()
        if kind == "dirichlet":
            return cls.dirichlet()
        return cls.robin(d["b"])


@dataclass(frozen=True)
class BallDomain:
    """Ball of radius ``radius`` centred at the interaction point."""

    radius: float
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.dirichlet)

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ParameterError(f"ball radius must be positive, got {self.radius!r}")

    @property
    def robin_coefficient(self):
        """Physical Robin coefficient ``b / R`` (``inf`` for Dirichlet)."""
        if self.bc.is_dirichlet:
            return math.inf
        return self.bc.b / self.radius

    def to_dict(self):
        return {"kind": "ball", "radius": self.radius, "bc": self.bc.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["radius"]), BoundaryCondition.from_dict(d["bc"]))


def domain_to_dict(domain):
    return {"kind": "free"} if domain is None else domain.to_dict()


def domain_from_dict(d):
    return None if d["kind"] == "free" else BallDomain.from_dict(d)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def _barycentric_weights(x):
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Composite Gauss-Legendre grid on ``(0, r_max]``.

    Attributes
    ----------
    nodes : ndarray
        Strictly increasing quadrature nodes.
    weights : ndarray
        Weights including ``4 pi r^2``: ``sum(w * f(r))`` approximates
        ``int_0^r_max f(r) 4 pi r^2 dr``.
    breaks : ndarray
        Panel boundaries, ``breaks[0] == 0`` and ``breaks[-1] == r_max``.
    order : int
        Nodes per panel.
    """

    nodes: np.ndarray
    weights: np.ndarray
    breaks: np.ndarray
    order: int

    @classmethod
    def from_breaks(cls, breaks, order):
        breaks = np.asarray(breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size < 2 or breaks[0] != 0.0:
            raise ParameterError("panel breaks must start at 0 and contain >= 2 points")
        if np.any(np.diff(breaks) <= 0):
            raise ParameterError("panel breaks must be strictly increasing")
        if order < 2:
            raise ParameterError("need at least 2 nodes per panel")
        x, wx = leggauss(order)
        lo, hi = breaks[:-1, None], breaks[1:, None]
        nodes = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
        raw = (0.5 * (hi - lo) * wx).ravel()
        return cls(nodes, raw * FOUR_PI * nodes**2, breaks, int(order))

    @property
    def size(self):
        return self.nodes.size

    @property
    def r_max(self):
        return float(self.breaks[-1])

    @property
    def n_panels(self):
        return self.breaks.size - 1

    @cached_property
    def raw_weights(self):
        """Weights for plain ``dr`` integration."""
        return self.weights / (FOUR_PI * self.nodes**2)

    @cached_property
    def sqrt_weights(self):
        return np.sqrt(self.weights)

    def integrate(self, values):
        """``int f 4 pi r^2 dr`` of nodal values."""
        return float(np.dot(self.weights, values))

    def inner(self, f, g):
        return float(np.dot(self.weights, np.asarray(f) * np.asarray(g)))

    def norm(self, f):
        return math.sqrt(self.inner(f, f))

    def panel_of(self, r):
        idx = np.searchsorted(self.breaks, np.asarray(r, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.n_panels - 1)

    def interpolation_matrix(self, targets):
        """Matrix mapping nodal values to values at ``targets``.

        Uses Lagrange interpolation on the panel containing each target, so
        functions that are smooth on every panel are reproduced to high order.
        """
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        p = self.order
        local = self.nodes.reshape(self.n_panels, p)
        lam = _barycentric_weights(local[0] - local[0].mean())
        # barycentric weights are translation invariant and scale as h^{1-p}
        out = np.zeros((targets.size, self.size))
        panels = self.panel_of(targets)
        for k, (t, pk) in enumerate(zip(targets, panels)):
            x = local[pk]
            d = t - x
            hit = np.flatnonzero(np.abs(d) <= 1e-15 * max(1.0, abs(t)))
            if hit.size:
                out[k, pk * p + hit[0]] = 1.0
                continue
            c = lam / d
            out[k, pk * p : (pk + 1) * p] = c / c.sum()
        return out

    def cumulative_matrix(self, targets):
        """Matrix ``C`` with ``(C f)(t) = int_0^t f(s) ds`` (plain measure)."""
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        p = self.order
        gx, gw = leggauss(p)
        raw = self.raw_weights
        out = np.zeros((targets.size, self.size))
        for k, t in enumerate(targets):
            if t <= 0:
                continue
            if t >= self.r_max:
                out[k] = raw
                continue
            pk = int(self.panel_of(t))
            out[k, : pk * p] = raw[: pk * p]
            a = self.breaks[pk]
            if t > a:
                s = 0.5 * (t - a) * gx + 0.5 * (t + a)
                L = self.interpolation_matrix(s)
                out[k] += (0.5 * (t - a) * gw) @ L
        return out

    def to_dict(self):
        return {
            "breaks": self.breaks.tolist(),
            "order": self.order,
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        grid = cls.from_breaks(d["breaks"], int(d["order"]))
        if "nodes" in d and not np.allclose(grid.nodes, d["nodes"], rtol=1e-14, atol=0):
            raise ParameterError("stored nodes do not match the panel description")
        return grid


def panel_grid(breaks, nodes_per_panel):
    """Grid with the given panel boundaries."""
    return RadialGrid.from_breaks(breaks, nodes_per_panel)


def _merge_breaks(breaks, extra, r_max):
    pts = [float(b) for b in breaks]
    for b in extra:
        b = float(b)
        if 0 < b < r_max:
            pts.append(b)
    pts = np.unique(np.asarray(pts))
    keep = np.concatenate([[True], np.diff(pts) > 1e-12 * r_max])
    pts = pts[keep]
    pts[-1] = r_max
    return pts


def build_graded_grid(n_panels, nodes_per_panel, r_max, inner_scale, breakpoints=()):
    """Geometrically graded composite Gauss-Legendre grid on ``(0, r_max]``.

    The first panel is ``[0, inner_scale]``; the remaining ``n_panels - 1``
    panels grow geometrically up to ``r_max``.  When ``inner_scale ==
    r_max`` the panels are uniform.  ``breakpoints`` are inserted as extra
    panel boundaries (use them for discontinuities of the integrand).
    """
    if n_panels < 1 or nodes_per_panel < 2:
        raise ParameterError("need n_panels >= 1 and nodes_per_panel >= 2")
    if not (0 < inner_scale <= r_max):
        raise ParameterError("need 0 < inner_scale <= r_max")
    if n_panels == 1:
        breaks = np.array([0.0, r_max])
    elif inner_scale >= r_max * (1 - 1e-12):
        breaks = np.linspace(0.0, r_max, n_panels + 1)
    else:
        breaks = np.concatenate(
            [[0.0], np.geomspace(inner_scale, r_max, n_panels)]
        )
    return RadialGrid.from_breaks(_merge_breaks(breaks, breakpoints, r_max), nodes_per_panel)


def layered_grid(support, r_max, nodes_per_panel=12, inner_panels=6, outer_panels=24,
                 breakpoints=()):
    """Uniform panels on ``[0, support]`` followed by geometric panels to ``r_max``.

    This is the grid used by the convergence sweeps: the inner layer scales
    with the support of the shrinking potential, so the discretization of the
    support region is the same at every scale.
    """
    if not (0 < support < r_max):
        raise SupportError(f"support {support!r} must lie inside (0, {r_max!r})")
    inner = np.linspace(0.0, support, inner_panels + 1)
    outer = np.geomspace(support, r_max, outer_panels + 1)[1:]
    breaks = _merge_breaks(np.concatenate([inner, outer]), breakpoints, r_max)
    return RadialGrid.from_breaks(breaks, nodes_per_panel)


# ---------------------------------------------------------------------------
# radial profiles and potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SquareWell:
    """Constant value ``depth`` on ``r < radius``."""

    depth: float = -1.0
    radius: float = 1.0
    kind = "square_well"

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.radius, self.depth, 0.0)

    def to_dict(self):
        return {"kind": self.kind, "depth": self.depth, "radius": self.radius}


@dataclass(frozen=True)
class TruncatedGaussian:
    """``depth * exp(-r^2 / (2 width^2))`` cut off at ``radius``."""

    width: float = 0.4
    radius: float = 1.0
    depth: float = -1.0
    kind = "truncated_gaussian"

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.radius, self.depth * np.exp(-0.5 * (r / self.width) ** 2), 0.0)

    def to_dict(self):
        return {"kind": self.kind, "width": self.width, "radius": self.radius,
                "depth": self.depth}


@dataclass(frozen=True)
class Tabulated:
    """Natural cubic spline through samples; zero beyond the last sample."""

    r: tuple
    values: tuple
    kind = "tabulated"

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.size < 3 or np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ParameterError("tabulated profile needs >= 3 increasing radii >= 0")
        if len(self.values) != r.size:
            raise ParameterError("tabulated profile: radii and values differ in length")
        object.__setattr__(self, "r", tuple(map(float, self.r)))
        object.__setattr__(self, "values", tuple(map(float, self.values)))

    @property
    def radius(self):
        return self.r[-1]

    @cached_property
    def _spline(self):
        return CubicSpline(self.r, self.values, bc_type="natural")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = r < self.radius
        return np.where(inside, self._spline(np.clip(r, self.r[0], self.radius)), 0.0)

    def to_dict(self):
        return {"kind": self.kind, "r": list(self.r), "values": list(self.values)}


_PROFILES = {cls.kind: cls for cls in (SquareWell, TruncatedGaussian, Tabulated)}


def profile_from_dict(d):
    d = dict(d)
    cls = _PROFILES.get(d.pop("kind", None))
    if cls is None:
        raise ParameterError(f"unknown profile {d!r}")
    return cls(**d)


@dataclass(frozen=True)
class RadialPotential:
    """``V(r) = coupling * profile(r / dilation)``.

    ``dilation`` is 1 for a base potential; :func:`scale_potential` shrinks
    it.  The support radius is ``dilation * profile.radius``.
    """

    profile: object
    coupling: float = 1.0
    dilation: float = 1.0

    @property
    def support(self):
        return self.dilation * self.profile.radius

    def __call__(self, r):
        return self.coupling * self.profile(np.asarray(r, dtype=float) / self.dilation)

    def with_coupling(self, coupling):
        return RadialPotential(self.profile, float(coupling), self.dilation)

    @property
    def sign_definite(self):
        s = self.profile(np.linspace(0.0, self.profile.radius, 2001)[:-1])
        return bool(np.all(s <= 0) or np.all(s >= 0))

    def integral(self, n=400):
        """``int V 4 pi r^2 dr`` by a fine quadrature on the support."""
        grid = build_graded_grid(max(1, n // 20), 20, self.support, self.support)
        return grid.integrate(self(grid.nodes))

    def check_inside(self, radius, what="domain"):
        if self.support >= radius:
            raise SupportError(
                f"potential support {self.support:.6g} is not inside the {what} "
                f"of radius {radius:.6g}"
            )

    def to_dict(self):
        return {"profile": self.profile.to_dict(), "coupling": self.coupling,
                "dilation": self.dilation}

    @classmethod
    def from_dict(cls, d):
        return cls(profile_from_dict(d["profile"]), float(d.get("coupling", 1.0)),
                   float(d.get("dilation", 1.0)))


def dumps(obj):
    """JSON text for anything with ``to_dict``."""
    return json.dumps(obj.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class PointInteractionStrength:
    """Coupling ``alpha`` of a point interaction; ``inf`` is the free operator."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if math.isnan(a) or a == -math.inf:
            raise ParameterError(f"alpha must be real or +Infinity, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def is_free(self):
        return math.isinf(self.alpha)

    @classmethod
    def parse(cls, value):
        """Accept a number or the strings ``"Infinity"``/``"inf"``."""
        if isinstance(value, str):
            if value.strip().lower() not in ("infinity", "inf", "+inf"):
                raise ParameterError(f"cannot read alpha from {value!r}")
            return cls(math.inf)
        return cls(value)

    def to_json(self):
        return "Infinity" if self.is_free else self.alpha


@dataclass(frozen=True)
class ScalingFamily:
    """``V_eps(x) = (1 + lam eps) eps^-2 V(x / eps)`` for listed ``eps``."""

    base: RadialPotential
    lam: float = 0.0
    eps_values: tuple = (0.2, 0.1, 0.05, 0.025)
    domain_radius: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "eps_values", tuple(float(e) for e in self.eps_values))
        for eps in self.eps_values:
            if not 0 < eps <= 1:
                raise ParameterError(f"eps must lie in (0, 1], got {eps!r}")
            if self.domain_radius is not None and eps * self.base.support >= self.domain_radius:
                raise SupportError(f"scaled support at eps={eps} leaves the domain")


def scale_potential(family, eps):
    """Member ``V_eps`` of a scaling family."""
    eps = float(eps)
    if not eps > 0:
        raise ParameterError("eps must be positive")
    if family.domain_radius is not None and eps * family.base.support >= family.domain_radius:
        raise SupportError(
            f"eps * a = {eps * family.base.support:.6g} >= R = {family.domain_radius:.6g}"
        )
    base = family.base
    factor = (1.0 + family.lam * eps) / eps**2
    return RadialPotential(base.profile, base.coupling * factor, base.dilation * eps)


def split_uv(V, r):
    """Nodal values of ``u = sgn(V)|V|^1/2`` and ``v = |V|^1/2``."""
    values = V(r)
    v = np.sqrt(np.abs(values))
    return np.sign(values) * v, v


# ---------------------------------------------------------------------------
# discretized integral operators
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class KernelOperator:
    """Dense discretization of an integral operator on a radial grid.

    ``matrix`` acts on orthonormal coordinates ``sqrt(w) f``; use
    :meth:`nodal` for the matrix acting on plain nodal values.
    """

    matrix: np.ndarray
    grid: RadialGrid
    ell: int = 0
    tag: str = ""

    def __post_init__(self):
        n = self.grid.size
        if self.matrix.shape != (n, n):
            raise ParameterError(f"matrix shape {self.matrix.shape} does not match grid size {n}")
        if not np.all(np.isfinite(self.matrix)):
            raise ParameterError(f"non-finite entries in operator {self.tag!r}")

    def nodal(self):
        s = self.grid.sqrt_weights
        return self.matrix * s[None, :] / s[:, None]

    def apply(self, f):
        s = self.grid.sqrt_weights
        return self.matrix @ (s * np.asarray(f)) / s

    def asymmetry(self):
        return float(np.max(np.abs(self.matrix - self.matrix.T)))

    def to_dict(self):
        return {"tag": self.tag, "ell": self.ell, "grid": self.grid.to_dict(),
                "layout": "row-major", "coordinates": "sqrt-weight",
                "shape": list(self.matrix.shape), "matrix": self.matrix.ravel().tolist()}

    @classmethod
    def from_dict(cls, d):
        grid = RadialGrid.from_dict(d["grid"])
        m = np.asarray(d["matrix"], dtype=float).reshape(d["shape"])
        return cls(m, grid, int(d.get("ell", 0)), d.get("tag", ""))


def export_operator(op, path):
    """Write an operator as JSON (``.json``) or row-major binary (``.npz``)."""
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            json.dump(op.to_dict(), fh)
    else:
        np.savez(path, matrix=np.ascontiguousarray(op.matrix), breaks=op.grid.breaks,
                 order=op.grid.order, ell=op.ell, tag=op.tag)


def load_operator(path):
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            return KernelOperator.from_dict(json.load(fh))
    data = np.load(path)
    grid = RadialGrid.from_breaks(data["breaks"], int(data["order"]))
    return KernelOperator(data["matrix"], grid, int(data["ell"]), str(data["tag"]))


def diagonal_defect(kernel, grid):
    """Quadrature defect of ``int K(r_i, s) 4 pi s^2 ds`` on the panel of ``r_i``.

    Kernels of Green-function type have a derivative jump on the diagonal,
    which costs Gauss panels most of their order.  Adding
    ``defect_i * f(r_i)`` to the plain Nystrom sum integrates
    ``K(r_i, .) (f - f(r_i))`` (a smoother integrand) by the panel rule and
    the remainder ``f(r_i) int K(r_i, .)`` by splitting the panel at ``r_i``.
    """
    p = grid.order
    q = min(2 * p, 48)
    gx, gw = leggauss(q)
    r = grid.nodes
    panels = np.arange(grid.size) // p
    a = grid.breaks[panels]
    b = grid.breaks[panels + 1]
    # split pieces [a, r_i] and [r_i, b]
    s1 = 0.5 * (r - a)[:, None] * gx + 0.5 * (r + a)[:, None]
    w1 = 0.5 * (r - a)[:, None] * gw
    s2 = 0.5 * (b - r)[:, None] * gx + 0.5 * (b + r)[:, None]
    w2 = 0.5 * (b - r)[:, None] * gw
    ri = r[:, None]
    exact = np.sum(kernel(ri, s1) * FOUR_PI * s1**2 * w1, axis=1)
    exact += np.sum(kernel(ri, s2) * FOUR_PI * s2**2 * w2, axis=1)
    local = r.reshape(-1, p)
    wl = grid.weights.reshape(-1, p)
    approx = np.sum(kernel(ri, local[panels]) * wl[panels], axis=1)
    return exact - approx


def nystrom_matrix(kernel, grid, subtract=True):
    """Symmetrized Nystrom matrix ``sqrt(w_i) K(r_i, r_j) sqrt(w_j)`` (+ defect).

    ``kernel`` must be symmetric; the result is symmetric bit for bit.
    """
    r = grid.nodes
    s = grid.sqrt_weights
    K = kernel(r[:, None], r[None, :])
    S = s[:, None] * K * s[None, :]
    S = 0.5 * (S + S.T)
    if subtract:
        S[np.diag_indices_from(S)] += diagonal_defect(kernel, grid)
    return S
