import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deltalab.core import (
    BallDomain,
    BoundaryCondition,
    KernelOperator,
    RadialGrid,
    RadialPotential,
    ScalingFamily,
    SquareWell,
    Tabulated,
    TruncatedGaussian,
    build_graded_grid,
    domain_from_dict,
    domain_to_dict,
    export_operator,
    layered_grid,
    load_operator,
    nystrom_matrix,
    scale_potential,
    split_uv,
)
from deltalab.errors import ParameterError, SupportError


def test_polynomials_integrate_exactly():
    g = build_graded_grid(6, 8, 2.0, 0.1)
    for n in range(0, 12):
        # int_0^2 r^n 4 pi r^2 dr
        exact = 4 * math.pi * 2.0 ** (n + 3) / (n + 3)
        assert g.integrate(g.nodes**n) == pytest.approx(exact, rel=1e-13)


def test_exponential_converges_under_refinement():
    exact = 4 * math.pi * (2 - math.exp(-5) * (25 + 10 + 2))
    errs = [abs(build_graded_grid(n, 4, 5.0, 5.0 / n).integrate(np.exp(-build_graded_grid(
        n, 4, 5.0, 5.0 / n).nodes)) - exact) for n in (2, 4, 8)]
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-6


def test_grid_roundtrip_and_breakpoints():
    g = layered_grid(0.05, 5.0, breakpoints=(1.0, 2.0))
    assert 1.0 in g.breaks and 2.0 in g.breaks and 0.05 in g.breaks
    g2 = RadialGrid.from_dict(json.loads(json.dumps(g.to_dict())))
    assert np.array_equal(g.nodes, g2.nodes)


def test_bad_breaks_rejected():
    with pytest.raises(ParameterError):
        RadialGrid.from_breaks([0.0, 1.0, 0.5], 4)
    with pytest.raises(ParameterError):
        RadialGrid.from_breaks([0.1, 1.0], 4)


def test_interpolation_and_cumulative():
    g = build_graded_grid(5, 10, 3.0, 0.3)
    t = np.array([0.01, 0.7, 1.9, 2.99])
    f = np.sin(g.nodes)
    assert np.allclose(g.interpolation_matrix(t) @ f, np.sin(t), atol=1e-9)
    assert np.allclose(g.cumulative_matrix(t) @ np.cos(g.nodes), np.sin(t), atol=1e-10)


def test_boundary_conditions():
    assert BoundaryCondition.neumann() == BoundaryCondition.robin(0.0)
    with pytest.raises(ParameterError):
        BoundaryCondition("dirichlet", 1.0)
    with pytest.raises(ParameterError):
        BoundaryCondition.robin(math.inf)
    D = BallDomain(4.0, BoundaryCondition.robin(2.0))
    assert D.robin_coefficient == 0.5
    assert domain_from_dict(domain_to_dict(D)) == D
    assert domain_from_dict(domain_to_dict(None)) is None
    with pytest.raises(ParameterError):
        BallDomain(-1.0)


def test_profiles_and_serialization():
    for prof in (SquareWell(), TruncatedGaussian(), Tabulated([0, 0.5, 1.0, 1.5], [-1, -0.5, -0.2, 0])):
        V = RadialPotential(prof, 2.0)
        W = RadialPotential.from_dict(json.loads(json.dumps(V.to_dict())))
        r = np.linspace(0.01, 1.4, 7)
        assert np.allclose(V(r), W(r))
    assert RadialPotential(SquareWell()).integral() == pytest.approx(-4 * math.pi / 3, rel=1e-12)


def test_scaling_family():
    V = RadialPotential(SquareWell(depth=-1.0, radius=1.0))
    fam = ScalingFamily(V, 1.0, (), 5.0)
    Ve = scale_potential(fam, 0.1)
    assert Ve.support == pytest.approx(0.1)
    assert Ve(0.05) == pytest.approx(-(1.1) / 0.01)
    # integral scales like eps (1 + lam eps)
    assert Ve.integral() == pytest.approx(0.1 * 1.1 * V.integral(), rel=1e-12)
    with pytest.raises(SupportError):
        scale_potential(ScalingFamily(V, 0.0, (), 0.5), 1.0)


def test_split_uv_product():
    V = RadialPotential(TruncatedGaussian(), 3.0)
    r = np.linspace(0, 1.2, 50)
    u, v = split_uv(V, r)
    assert np.allclose(u * v, V(r))
    assert np.all(v >= 0)


def test_nystrom_subtraction_improves_accuracy():
    # int_0^1 4 pi s^2 / (4 pi max(r, s)) ds for f = 1 equals 1/2 - r^2/6
    g = build_graded_grid(4, 8, 1.0, 1.0)
    ker = lambda r, s: 1.0 / (4 * math.pi * np.maximum(r, s))
    exact = 0.5 - g.nodes**2 / 6
    plain = KernelOperator(nystrom_matrix(ker, g, subtract=False), g).apply(np.ones(g.size))
    sub = KernelOperator(nystrom_matrix(ker, g), g).apply(np.ones(g.size))
    assert np.max(np.abs(sub - exact)) < 1e-12
    assert np.max(np.abs(sub - exact)) < np.max(np.abs(plain - exact))


def test_operator_export_roundtrip(tmp_path):
    g = build_graded_grid(3, 6, 1.0, 1.0)
    op = KernelOperator(np.arange(g.size**2, dtype=float).reshape(g.size, g.size), g, 0, "x")
    for name in ("op.json", "op.npz"):
        export_operator(op, tmp_path / name)
        back = load_operator(tmp_path / name)
        assert np.array_equal(back.matrix, op.matrix)
        assert np.array_equal(back.grid.nodes, g.nodes)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 3.0), st.integers(1, 6), st.integers(2, 12))
def test_weights_integrate_constants(r_max, panels, order):
    g = build_graded_grid(panels, order, r_max, r_max / panels)
    assert g.integrate(np.ones(g.size)) == pytest.approx(4 * math.pi * r_max**3 / 3, rel=1e-12)
    assert np.all(np.diff(g.nodes) > 0)


def test_point_interaction_strength():
    from deltalab.core import PointInteractionStrength as P
    assert P.parse("Infinity").is_free and P.parse("inf").to_json() == "Infinity"
    assert P.parse(-0.5).alpha == -0.5 and not P(0.0).is_free
    for bad in ("foo", -math.inf, math.nan):
        with pytest.raises(ParameterError):
            P.parse(bad)
