"""Scaling sweeps: distance between approximating and limiting resolvents.

Every sweep builds, for each ``eps``, a grid whose inner panels cover the
shrinking support, the resolvent of the approximating operator, and the two
candidate limits (point interaction and free Laplacian).  The distance to the
expected limit goes in ``norm_l0`` (and the annulus columns); the distance to
the other candidate goes in ``norm_alt``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bsop import tune_resonance
from .core import (
    FOUR_PI,
    ScalingFamily,
    build_graded_grid,
    domain_to_dict,
    layered_grid,
    scale_potential,
)
from .errors import DeltalabError, FitError, ParameterError, SpectralPointError
from .greens import as_point, correction_l0
from .resolvent import (
    a_eps,
    check_spectral_point,
    electrostatic_energy,
    kk_resolvent,
    nonlocal_resolvent,
    op_norm_diff,
    pi_resolvent,
    r0,
)

CSV_COLUMNS = ("eps", "norm_l0", "norm_ann_l2", "norm_ann_h2", "scalar_gap", "valid")
DEFAULT_EPS = (0.2, 0.1, 0.05, 0.025)
SLOPE_THRESHOLD = 0.8


@dataclass(frozen=True)
class GridSpec:
    """Panel layout used for every ``eps`` of a sweep."""

    order: int = 12
    inner_panels: int = 8
    outer_panels: int = 30
    free_radius: float = 30.0
    workers: int = 4


@dataclass
class SweepRow:
    eps: float
    norm_l0: float = math.nan
    norm_ann_l2: float = math.nan
    norm_ann_h2: float = math.nan
    scalar_gap: float = math.nan
    valid: bool = True
    norm_alt: float = math.nan
    norm_two_sided: float = math.nan
    note: str = ""


@dataclass
class ConvergenceReport:
    rows: list
    slope: float = math.nan
    intercept: float = math.nan
    r2: float = math.nan
    meta: dict = field(default_factory=dict)

    def column(self, name, valid_only=True):
        rows = [r for r in self.rows if r.valid or not valid_only]
        return np.array([getattr(r, name) for r in rows], dtype=float)

    @property
    def eps(self):
        return self.column("eps")

    def fit(self, name="norm_l0"):
        return fit_rate(self.eps, self.column(name))

    def alt_floor_ratio(self):
        """Smallest distance to the other limit over the last decaying value."""
        return float(np.min(self.column("norm_alt")) / self.column("norm_l0")[-1])

    def to_csv(self, config_hash=None):
        buf = io.StringIO()
        if config_hash:
            buf.write(f"# config_sha256={config_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r.eps), _fmt(r.norm_l0), _fmt(r.norm_ann_l2), _fmt(r.norm_ann_h2),
                        _fmt(r.scalar_gap), int(bool(r.valid))])
        return buf.getvalue()

    def to_dict(self):
        return {"meta": self.meta, "slope": self.slope, "intercept": self.intercept,
                "r2": self.r2, "columns": list(CSV_COLUMNS),
                "rows": [asdict(r) for r in self.rows]}

    def to_json(self, config_hash=None):
        d = self.to_dict()
        if config_hash:
            d["config_sha256"] = config_hash
        return json.dumps(_jsonable(d), indent=2, sort_keys=True)

    def plot_script(self, csv_name="report.csv"):
        """gnuplot commands for a log-log plot of the CSV columns."""
        return "\n".join([
            "set datafile separator ','",
            "set logscale xy",
            "set xlabel 'eps'",
            "set ylabel 'operator norm'",
            "set key left top",
            f"plot '{csv_name}' skip 2 using 1:2 with linespoints title 'L2', \\",
            f"     '{csv_name}' skip 2 using 1:3 with linespoints title 'L2(annulus)', \\",
            f"     '{csv_name}' skip 2 using 1:4 with linespoints title 'H2 proxy(annulus)'",
            "",
        ])


def _fmt(x):
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def fit_rate(eps, values):
    """Least-squares line through ``(log eps, log value)``: slope, intercept, R^2."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if eps.size < 4:
        raise FitError(f"need at least 4 rows to fit a rate, got {eps.size}")
    bad = np.flatnonzero(~(values > 0) | ~np.isfinite(values))
    if bad.size:
        raise FitError(f"nonpositive or non-finite norms in rows {bad.tolist()}")
    x, y = np.log(eps), np.log(values)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, intercept])
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def _check_eps(eps_list):
    eps = [float(e) for e in eps_list]
    if any(not 0 < e <= 1 for e in eps):
        raise ParameterError("eps values must lie in (0, 1]")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ParameterError("eps values must be strictly decreasing")
    return eps


def _sweep_grid(domain, support, annulus, spec):
    r_max = spec.free_radius if domain is None else domain.radius
    return layered_grid(support, r_max, spec.order, spec.inner_panels, spec.outer_panels,
                        breakpoints=annulus or ())


def _norms(row, approx, target, alt, annulus):
    row.norm_l0 = op_norm_diff(approx, target)
    row.norm_alt = op_norm_diff(approx, alt)
    if annulus is not None:
        row.norm_ann_l2 = op_norm_diff(approx, target, restriction=annulus)
        row.norm_ann_h2 = op_norm_diff(approx, target, restriction=annulus, h2=True)
        row.norm_two_sided = op_norm_diff(approx, target, restriction=annulus,
                                          input_restriction=annulus)


def _map_rows(fn, eps_list, workers):
    # map keeps input order, so reports do not depend on scheduling
    if workers <= 1 or len(eps_list) == 1:
        return [fn(e) for e in eps_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, eps_list))


def _finish(report):
    valid = [r for r in report.rows if r.valid]
    if len(valid) >= 4:
        try:
            report.slope, report.intercept, report.r2 = report.fit()
        except FitError:
            pass
    return report


def _resonance_grid(V):
    a = V.support
    return build_graded_grid(40, 10, a, a / 40)


def _check_annulus(annulus, r_max, support):
    if annulus is None:
        return None
    r1, r2 = map(float, annulus)
    if not (0 < r1 < r2 < r_max):
        raise ParameterError(f"annulus {annulus!r} must satisfy 0 < r1 < r2 < {r_max}")
    if r1 < support:
        raise ParameterError("the annulus must avoid the support of the scaled potentials")
    return (r1, r2)


def sweep_local(domain, V, lam, eps_list=DEFAULT_EPS, z=1.0, annulus=(1.0, 2.0),
                resonance=None, target="auto", grid_spec=GridSpec()):
    """Distance of ``(-Delta_sigma + V_eps + z)^-1`` to its expected limit.

    The limit is the point interaction with ``alpha = -lam <v, phi>^-2`` when
    ``V`` sits at a zero-energy resonance and the free resolvent otherwise
    (``target`` may force ``"point"`` or ``"free"``).  ``alpha`` always comes
    from the resonance of ``V``'s profile, so the alternative column of a
    detuned sweep measures the distance to that point interaction.
    """
    eps_list = _check_eps(eps_list)
    z = as_point(z).z
    if resonance is None:
        resonance = tune_resonance(V, _resonance_grid(V))
    resonant = abs(V.coupling / resonance.coupling - 1.0) < 1e-8
    if target == "auto":
        target = "point" if resonant else "free"
    if target not in ("point", "free"):
        raise ParameterError(f"unknown target {target!r}")
    alpha = resonance.alpha(lam)
    r_max = grid_spec.free_radius if domain is None else domain.radius
    annulus = _check_annulus(annulus, r_max, max(eps_list) * V.support)

    meta = {
        "experiment": "local" if domain is not None else "free",
        "domain": domain_to_dict(domain), "z": z, "lam": float(lam), "alpha": alpha,
        "potential": V.to_dict(), "theta_star": resonance.coupling,
        "resonant": resonant, "target": target, "annulus": annulus,
        "grid": asdict(grid_spec),
    }
    try:
        check_spectral_point(domain, z, alpha)
        spectral_ok = True
    except SpectralPointError as exc:
        spectral_ok, meta["spectral_point"] = False, str(exc)

    family = ScalingFamily(V, lam, (), None if domain is None else domain.radius)

    def one(eps):
        row = SweepRow(eps)
        if not spectral_ok:
            row.valid, row.note = False, "z too close to an eigenvalue"
            return row
        try:
            Ve = scale_potential(family, eps)
            grid = _sweep_grid(domain, Ve.support, annulus, grid_spec)
            R0 = r0(domain, z, grid)
            RV = kk_resolvent(domain, z, Ve, grid, free=R0)
            Ra = pi_resolvent(domain, z, alpha, grid, free=R0)
        except DeltalabError as exc:
            row.valid, row.note = False, str(exc)
            return row
        tgt, alt = (Ra, R0) if target == "point" else (R0, Ra)
        _norms(row, RV, tgt, alt, annulus)
        return row

    rows = _map_rows(one, eps_list, grid_spec.workers)
    return _finish(ConvergenceReport(rows, meta=meta))


def sweep_free(V, lam, eps_list=DEFAULT_EPS, z=1.0, annulus=(1.0, 2.0), resonance=None,
               target="auto", grid_spec=GridSpec()):
    """Whole-space version of :func:`sweep_local` (grid truncated at ``free_radius``)."""
    if annulus is None:
        raise ParameterError("the whole-space sweep needs an annulus away from the origin")
    return sweep_local(None, V, lam, eps_list, z, annulus, resonance, target, grid_spec)


def point_denominator(domain, z, alpha):
    """``alpha + sqrt(z)/(4 pi) - h_z(0)``."""
    return alpha + as_point(z).kappa / FOUR_PI - correction_l0(domain, z).at_origin


def sweep_nonlocal(domain, rho, alpha, eps_list=DEFAULT_EPS, z=4.0, scaling="correct",
                   wrong_exponent=2.0, annulus=(1.0, 2.0), grid_spec=GridSpec()):
    """Rank-one approximation ``-Delta_sigma + a(eps) (rho^eps, .) rho^eps``.

    With ``scaling="correct"`` the coupling is ``a = -eps/l + alpha eps^2/l^2``
    and the expected limit is the point interaction; with ``"wrong"`` it is
    ``a = -eps^p / l`` and the expected limit is the free resolvent.  The
    ``scalar_gap`` column is
    ``|-1/a - <rho^eps, R0 rho^eps> - (alpha + sqrt(z)/(4 pi) - h_z(0))|``.
    """
    eps_list = _check_eps(eps_list)
    z = as_point(z).z
    if scaling not in ("correct", "wrong"):
        raise ParameterError(f"unknown scaling {scaling!r}")
    energy = electrostatic_energy(rho, _resonance_grid(rho))
    r_max = grid_spec.free_radius if domain is None else domain.radius
    annulus = _check_annulus(annulus, r_max, max(eps_list) * rho.support)
    limit_denominator = point_denominator(domain, z, alpha)
    target = "point" if scaling == "correct" else "free"
    meta = {
        "experiment": "nonlocal", "domain": domain_to_dict(domain), "z": z,
        "alpha": float(alpha), "density": rho.to_dict(), "electrostatic_energy": energy,
        "scaling": scaling, "target": target, "annulus": annulus,
        "limit_denominator": limit_denominator, "grid": asdict(grid_spec),
    }
    if scaling == "wrong":
        meta["wrong_exponent"] = float(wrong_exponent)
        meta["branch"] = "free-limit"
    try:
        check_spectral_point(domain, z, alpha)
        spectral_ok = True
    except SpectralPointError as exc:
        spectral_ok, meta["spectral_point"] = False, str(exc)

    def one(eps):
        row = SweepRow(eps)
        if not spectral_ok:
            row.valid, row.note = False, "z too close to an eigenvalue"
            return row
        if scaling == "correct":
            a = a_eps(eps, alpha, energy)
        else:
            a = -(eps**wrong_exponent) / energy
        try:
            grid = _sweep_grid(domain, eps * rho.support, annulus, grid_spec)
            R0 = r0(domain, z, grid)
            RH = nonlocal_resolvent(domain, z, rho, eps, a, grid, free=R0)
            Ra = pi_resolvent(domain, z, alpha, grid, free=R0)
        except DeltalabError as exc:
            row.valid, row.note = False, str(exc)
            return row
        row.scalar_gap = abs(-1.0 / a - RH.data["quadratic_form"] - limit_denominator)
        tgt, alt = (Ra, R0) if target == "point" else (R0, Ra)
        _norms(row, RH, tgt, alt, annulus)
        return row

    rows = _map_rows(one, eps_list, grid_spec.workers)
    return _finish(ConvergenceReport(rows, meta=meta))


@dataclass
class SectorReport:
    eps: np.ndarray
    norms: np.ndarray
    point_vs_free: np.ndarray
    slope: float
    intercept: float
    r2: float
    ell: int = 1


def sector_check(domain, V, eps_list=DEFAULT_EPS, z=1.0, lam=0.0, ell=1,
                 grid_spec=GridSpec()):
    """Decay of ``R_{V_eps} - R0`` on a sector ``ell >= 1``.

    The point interaction leaves these sectors alone, so the regular
    resolvents must approach the free one there.
    """
    if ell < 1:
        raise ParameterError("sector_check is for ell >= 1")
    eps_list = _check_eps(eps_list)
    norms, pvf = [], []
    for eps in eps_list:
        Ve = scale_potential(ScalingFamily(V, lam, (), None if domain is None
                                           else domain.radius), eps)
        grid = _sweep_grid(domain, Ve.support, None, grid_spec)
        R0 = r0(domain, z, grid, ell=ell)
        RV = kk_resolvent(domain, z, Ve, grid, ell=ell, free=R0)
        Ra = pi_resolvent(domain, z, 0.0, grid, ell=ell, free=R0)
        norms.append(op_norm_diff(RV, R0))
        pvf.append(float(np.max(np.abs(Ra.matrix - R0.matrix))))
    eps = np.array(eps_list)
    norms = np.array(norms)
    slope, intercept, r2 = fit_rate(eps, norms) if eps.size >= 4 else (math.nan,) * 3
    return SectorReport(eps, norms, np.array(pvf), slope, intercept, r2, ell)
