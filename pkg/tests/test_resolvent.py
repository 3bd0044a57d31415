import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from conftest import resonance_grid
from deltalab.core import (
    BallDomain,
    BoundaryCondition,
    RadialPotential,
    SquareWell,
    TruncatedGaussian,
    layered_grid,
)
from deltalab.errors import NormalizationError, ParameterError, PoleError, SpectralPointError
from deltalab.resolvent import (
    a_eps,
    check_spectral_point,
    electrostatic_energy,
    kk_resolvent,
    largest_singular_value,
    nonlocal_resolvent,
    op_norm_diff,
    pi_eigenvalue,
    pi_resolvent,
    r0,
)

FINE = dict(nodes_per_panel=16, inner_panels=8, outer_panels=40)


def f_test(r):
    return np.exp(-r**2)


def test_zero_potential_is_free(dirichlet5):
    g = layered_grid(1.0, 5.0)
    R0 = r0(dirichlet5, 1.0, g)
    RV = kk_resolvent(dirichlet5, 1.0, RadialPotential(SquareWell(), 0.0), g, free=R0)
    assert np.array_equal(RV.matrix, R0.matrix)


@pytest.mark.parametrize("V", [RadialPotential(TruncatedGaussian(), 3.0),
                               RadialPotential(SquareWell(), 2.0),
                               RadialPotential(SquareWell(), -1.0)])
@pytest.mark.parametrize("bc,beta", [(BoundaryCondition.dirichlet(), None),
                                     (BoundaryCondition.robin(2.0), 0.4)])
def test_kk_matches_finite_differences(V, bc, beta):
    D = BallDomain(5.0, bc)
    g = layered_grid(1.0, 5.0, **FINE)
    psi = kk_resolvent(D, 1.0, V, g).apply(f_test(g.nodes))
    ref = O.fd_richardson(V, 1.0, f_test, 5.0, 20000, g.nodes, beta=beta)
    assert np.max(np.abs(psi - ref)) < 1e-4 * np.max(np.abs(ref))


def test_first_resolvent_identity(dirichlet5):
    g = layered_grid(1.0, 5.0, **FINE)
    V = RadialPotential(TruncatedGaussian(), 3.0)
    A, B = kk_resolvent(dirichlet5, 1.0, V, g), kk_resolvent(dirichlet5, 2.0, V, g)
    M = A.matrix - B.matrix - (2.0 - 1.0) * A.matrix @ B.matrix
    assert np.linalg.norm(M, 2) < 1e-8 * np.linalg.norm(A.matrix, 2)


def test_point_interaction_resolvent_identity(robin5):
    g = layered_grid(0.1, 5.0, **FINE)
    A, B = pi_resolvent(robin5, 1.0, -0.05, g), pi_resolvent(robin5, 3.0, -0.05, g)
    M = A.matrix - B.matrix - 2.0 * A.matrix @ B.matrix
    assert np.linalg.norm(M, 2) < 1e-7 * np.linalg.norm(A.matrix, 2)


def test_point_interaction_is_rank_one_on_s_wave(dirichlet5):
    g = layered_grid(0.1, 5.0)
    R0 = r0(dirichlet5, 1.0, g)
    sv = np.linalg.svd(pi_resolvent(dirichlet5, 1.0, 0.3, g, free=R0).matrix - R0.matrix,
                       compute_uv=False)
    assert sv[1] < 1e-12 * sv[0]
    R1 = r0(dirichlet5, 1.0, g, ell=1)
    assert np.array_equal(pi_resolvent(dirichlet5, 1.0, 0.3, g, ell=1, free=R1).matrix,
                          R1.matrix)
    assert np.array_equal(pi_resolvent(dirichlet5, 1.0, math.inf, g, free=R0).matrix, R0.matrix)


@pytest.mark.parametrize("alpha", [-0.01, -1 / (4 * math.pi), -0.5])
def test_free_point_eigenvalue(alpha):
    E = pi_eigenvalue(None, alpha, e_max=1e3)
    assert abs(E - O.free_pi_eigenvalue(alpha)) < 1e-10 * max(1.0, abs(E))


def test_dirichlet_point_eigenvalue():
    E = pi_eigenvalue(BallDomain(10.0), -1 / (4 * math.pi))
    assert abs(E + 1) < 1e-6
    k = O.dirichlet_pi_pole(-1 / (4 * math.pi), 10.0)
    assert abs(E + k * k) < 1e-10


def test_no_eigenvalue_cases():
    assert pi_eigenvalue(None, 0.3) is None
    assert pi_eigenvalue(None, math.inf) is None


def test_pole_and_spectral_checks():
    alpha = -1 / (4 * math.pi)
    with pytest.raises(PoleError):
        pi_resolvent(None, 1.0, alpha, layered_grid(0.1, 10.0))
    with pytest.raises(SpectralPointError):
        check_spectral_point(None, 1.0, alpha)
    assert check_spectral_point(None, 4.0, alpha) == pytest.approx(-1.0)


def test_kk_on_bound_state_raises(dirichlet5):
    # for an attractive well 1 + u R0 v = 1 - v R0 v is symmetric; tune its
    # lowest eigenvalue to zero, i.e. put a bound state at energy -z
    g = layered_grid(1.0, 5.0)
    S = r0(dirichlet5, 1.0, g).matrix
    s = np.sqrt(np.abs(RadialPotential(SquareWell())(g.nodes)))

    def lowest(theta):
        v = math.sqrt(theta) * s
        return np.linalg.eigvalsh(np.eye(g.size) - v[:, None] * S * v[None, :])[0]

    from scipy.optimize import brentq

    theta = brentq(lowest, 3.0, 10.0, xtol=1e-14)
    with pytest.raises(SpectralPointError):
        kk_resolvent(dirichlet5, 1.0, RadialPotential(SquareWell(), theta), g)
    kk_resolvent(dirichlet5, 1.0, RadialPotential(SquareWell(), 0.9 * theta), g)


def test_electrostatic_energy(uniform_density):
    assert abs(electrostatic_energy(uniform_density, resonance_grid()) - O.uniform_ball_energy(1.0)) < 1e-12
    with pytest.raises(NormalizationError):
        electrostatic_energy(uniform_density.with_coupling(2.0), resonance_grid())


@pytest.mark.parametrize("domain_radius", [None, 5.0])
def test_rank_one_quadratic_form(uniform_density, domain_radius):
    D = None if domain_radius is None else BallDomain(domain_radius)
    for eps in (0.5, 0.05):
        g = layered_grid(eps, 5.0 if D else 30.0, **FINE)
        H = nonlocal_resolvent(D, 4.0, uniform_density, eps, -1.0, g)
        ref = O.uniform_ball_yukawa(eps, 4.0, domain_radius)
        assert H.data["quadratic_form"] == pytest.approx(ref, rel=1e-10)


def test_a_eps():
    l = O.uniform_ball_energy(1.0)
    assert a_eps(0.1, 0.0, l) == pytest.approx(-0.1 / l)
    with pytest.raises(ParameterError):
        a_eps(0.1, 0.0, 0.0)


def test_norm_against_jacobi_svd():
    rng = np.random.default_rng(3)
    for shape in ((12, 12), (20, 7)):
        M = rng.normal(size=shape)
        assert largest_singular_value(M, tol=1e-14) == pytest.approx(O.jacobi_svd_max(M), rel=1e-9)


def test_restricted_norms(dirichlet5, well):
    g = layered_grid(0.2, 5.0, breakpoints=(1.0, 2.0))
    A = kk_resolvent(dirichlet5, 1.0, well.with_coupling(2.0), g)
    B = r0(dirichlet5, 1.0, g)
    full = op_norm_diff(A, B)
    ann = op_norm_diff(A, B, restriction=(1.0, 2.0))
    two = op_norm_diff(A, B, restriction=(1.0, 2.0), input_restriction=(1.0, 2.0))
    assert two <= ann * (1 + 1e-6) and ann <= full * (1 + 1e-6)
    assert full == pytest.approx(np.linalg.norm(A.matrix - B.matrix, 2), rel=1e-6)
    with pytest.raises(ParameterError):
        op_norm_diff(A, B, h2=True)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 20.0), st.floats(-3.0, 3.0))
def test_free_resolvent_contracts(z, alpha):
    # ||(-Delta_D + z)^-1|| <= 1 / (lambda_1 + z) on the Dirichlet ball
    D = BallDomain(3.0)
    g = layered_grid(0.3, 3.0, 8, 4, 10)
    nrm = np.linalg.norm(r0(D, z, g).matrix, 2)
    assert nrm <= 1 / ((math.pi / 3) ** 2 + z) * (1 + 1e-4)
    try:
        P = pi_resolvent(D, z, alpha, g)
    except PoleError:
        return
    assert np.allclose(P.matrix, P.matrix.T, atol=1e-14 * np.max(np.abs(P.matrix)))


def test_robin_negative_b_window():
    D = BallDomain(1.0, BoundaryCondition.robin(-3.0))
    from deltalab.greens import admissible_z_min
    z_min = admissible_z_min(D)
    assert z_min > 0
    g = layered_grid(0.2, 1.0)
    with pytest.raises(SpectralPointError):
        r0(D, 0.5 * z_min, g)
    R = r0(D, 2 * z_min, g)
    # positive definite once z is inside the window
    assert np.linalg.eigvalsh(R.matrix)[0] > 0
