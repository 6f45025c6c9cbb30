import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frkc.problems import (
    PROBLEMS,
    MeshSpec,
    brusselator_2d,
    get_problem,
    heat_1d_analytic,
    heat_1d_eigenvalues,
    quadratic_decay,
    two_material_heat,
)


def _dense_jacobian(rhs, w, eps=1e-6):
    f0 = rhs(0.0, w)
    J = np.empty((len(f0), len(w)))
    for j in range(len(w)):
        e = np.zeros_like(w)
        e[j] = eps
        J[:, j] = (rhs(0.0, w + e) - f0) / eps
    return J


def test_mesh_spec():
    m = MeshSpec(2, 50)
    assert m.h == pytest.approx(0.02)
    assert m.unknowns == 2500


def test_brusselator_equilibrium():
    n = 16
    p = brusselator_2d(n)
    y = np.concatenate((np.ones(n * n), 3 * np.ones(n * n)))
    assert np.max(np.abs(p.system.rhs(0.0, y))) == 0.0
    assert p.system.dimension == 2 * p.mesh.unknowns == len(p.w0)


def test_brusselator_initial_data_layout():
    p = brusselator_2d(8)
    v0, w0 = p.w0.reshape(2, 8, 8)
    x = np.arange(8) / 8
    np.testing.assert_allclose(v0[:, 0], 1 + np.sin(2 * np.pi * x))
    np.testing.assert_allclose(w0[0, :], 3 + np.cos(2 * np.pi * x))


def test_brusselator_rho_formula():
    assert brusselator_2d(200).rho_formula == pytest.approx(6400)
    assert brusselator_2d(50).rho_formula == pytest.approx(400)


def test_brusselator_diffusion_spectrum_is_real():
    n = 8
    p = brusselator_2d(n)
    # at the origin the v-block of the Jacobian is 0.02 * Laplacian - 4 I
    J = _dense_jacobian(p.system.rhs, np.zeros(2 * n * n))
    diffusion = J[: n * n, : n * n] + 4 * np.eye(n * n)
    lam = np.linalg.eigvals(diffusion)
    assert np.max(np.abs(lam.imag)) < 1e-10 * np.max(np.abs(lam))
    assert np.min(lam.real) == pytest.approx(-0.02 * 8 * n * n, rel=1e-4)


def test_heat_problems_conserve():
    rng = np.random.default_rng(1)
    for p in (two_material_heat(64), heat_1d_analytic(40)):
        w = rng.standard_normal(p.system.dimension)
        assert abs(np.sum(p.system.rhs(0.0, w))) < 1e-9 * np.max(np.abs(p.system.rhs(0.0, w)))


def test_two_material_setup():
    p = two_material_heat(64)
    assert p.w0[0] == 10 and p.w0[-1] == 0.1
    assert np.all(np.diff(p.w0) <= 0)
    assert np.max(np.abs(p.system.rhs(0.0, np.full(64, 3.0)))) == 0.0
    uniform = two_material_heat(64, kappa_left=1.0, kappa_right=1.0)
    assert np.max(np.abs(uniform.system.rhs(0.0, np.full(64, 3.0)))) == 0.0


def test_two_material_symmetric_jacobian():
    p = two_material_heat(32)
    J = _dense_jacobian(p.system.rhs, p.w0)
    np.testing.assert_allclose(J, J.T, atol=1e-3 * np.max(np.abs(J)))
    lam = np.linalg.eigvals(J)
    assert np.max(np.abs(lam.imag)) < 1e-10 * np.max(np.abs(lam))


def test_argument_checks():
    with pytest.raises(ValueError):
        two_material_heat(33)
    with pytest.raises(ValueError):
        two_material_heat(16)
    with pytest.raises(ValueError):
        brusselator_2d(4)
    with pytest.raises(ValueError):
        heat_1d_analytic(4)


def test_heat_eigenvalues_match_dense():
    n = 24
    p = heat_1d_analytic(n)
    J = _dense_jacobian(p.system.rhs, np.zeros(n), eps=1.0)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(J)), np.sort(heat_1d_eigenvalues(n)), atol=1e-8)


@settings(max_examples=20)
@given(st.floats(0.0, 0.5))
def test_heat_exact_solves_semi_discrete_system(t):
    p = heat_1d_analytic(16)
    dt = 1e-6
    deriv = (p.exact(t + dt) - p.exact(t - dt)) / (2 * dt) if t > dt else (p.exact(t + dt) - p.exact(t)) / dt
    np.testing.assert_allclose(deriv, p.system.rhs(t, p.exact(t)), atol=1e-4)


def test_heat_single_mode_and_limit():
    p = heat_1d_analytic(32)
    lam1 = heat_1d_eigenvalues(32)[1]
    np.testing.assert_allclose(p.exact(0.3), p.w0 * np.exp(lam1 * 0.3), atol=1e-13)
    assert abs(np.mean(p.w0)) < 1e-15
    np.testing.assert_allclose(p.exact(50.0), 0.0, atol=1e-12)


def test_quadratic_decay():
    p = quadratic_decay(3)
    np.testing.assert_allclose(p.exact(1.0), 0.5)
    np.testing.assert_allclose(p.system.rhs(0.0, p.w0), -1.0)


def test_registry():
    assert set(PROBLEMS) == {"brusselator", "heat_1d", "two_material", "quadratic_decay"}
    assert get_problem("heat_1d", 16).mesh.points == 16
    with pytest.raises(KeyError, match="unknown problem"):
        get_problem("advection")
