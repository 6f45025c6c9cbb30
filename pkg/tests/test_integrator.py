import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from frkc.integrator import (
    ControllerState,
    IntegrationConfig,
    IntegrationError,
    SchemeTable,
    SemiDiscreteSystem,
    StepFailure,
    error_norm,
    estimate_spectral_radius,
    frkc2_step,
    integrate,
    integrate_fixed,
    next_step_size,
    power_iteration,
    reject_step,
    select_M,
)
from frkc.problems import heat_1d_analytic, quadratic_decay
from frkc.scheme import build_scheme


def test_linear_step_matches_stability_function():
    sc = build_scheme(2, 6)
    lam = np.linspace(-sc.beta_bar, 0, 13)
    T = 0.5
    w0 = np.linspace(1, 2, 13)
    w2, _ = frkc2_step(lambda t, w: (lam / T) * w, w0, 0.0, T, sc)
    np.testing.assert_allclose(w2, sc(lam).real * w0, rtol=0, atol=1e-12)


def test_step_counts_evaluations():
    calls = []
    sc = build_scheme(2, 5)
    frkc2_step(lambda t, w: calls.append(t) or -w, np.ones(2), 0.0, 0.1, sc)
    assert len(calls) == sc.degree


def test_step_zero_T_is_identity():
    sc = build_scheme(2, 3)
    w2, w1 = frkc2_step(lambda t, w: -w * w, np.array([0.3, 2.0]), 0.0, 0.0, sc)
    np.testing.assert_array_equal(w2, [0.3, 2.0])
    np.testing.assert_array_equal(w1, [0.3, 2.0])


def test_step_failure_on_overflow():
    sc = build_scheme(2, 2)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(StepFailure):
            frkc2_step(lambda t, w: w**8, np.array([1e40]), 0.0, 1.0, sc)


def test_embedded_pair_orders():
    prob = heat_1d_analytic(64)
    sc = build_scheme(2, 4)
    gaps, errs = [], []
    for T in (2e-3, 1e-3, 5e-4):
        w2, w1 = frkc2_step(prob.system.rhs, prob.w0, 0.0, T, sc)
        gaps.append(np.max(np.abs(w2 - w1)))
        errs.append(np.max(np.abs(w2 - prob.exact(T))))
    assert gaps[0] / gaps[1] == pytest.approx(4, abs=0.5)
    assert errs[1] / errs[2] == pytest.approx(8, abs=1)


def test_error_norm():
    assert error_norm(np.zeros(3), np.zeros(3), 1e-3) == 0.0
    assert error_norm(np.array([1.0]), np.array([1.0 + 2e-3]), 1e-3) == pytest.approx(2e-3 / (1e-3 * (2 + 2e-3)))


@given(st.floats(1e-6, 1.0), st.floats(1e-4, 1e4), st.floats(1e-6, 1.0), st.floats(1e-4, 1e4))
def test_controller_clamped(T_prev, err_prev, T, err):
    ctl = ControllerState()
    ctl.push(T_prev, err_prev)
    ctl.push(T, err)
    nxt = next_step_size(ctl, 0.8)
    assert T / 10 * (1 - 1e-12) <= nxt <= 10 * T * (1 + 1e-12)


def test_controller_first_step_and_zero_error():
    ctl = ControllerState()
    ctl.push(0.1, 0.25)
    assert next_step_size(ctl, 0.8) == pytest.approx(0.1 * 0.8 / 0.5)
    ctl.push(0.1, 0.0)
    assert next_step_size(ctl, 0.8) == pytest.approx(1.0)
    assert reject_step(0.1, 4.0, 0.8) == pytest.approx(0.04)


def test_predictive_formula():
    ctl = ControllerState()
    ctl.push(0.1, 0.5)
    ctl.push(0.2, 0.4)
    expected = 0.2 * (0.8 / math.sqrt(0.4)) * (0.2 / 0.1) * math.sqrt(0.5 / 0.4)
    assert next_step_size(ctl, 0.8) == pytest.approx(expected)


def test_select_M_smallest_sufficient():
    table = SchemeTable(M_max=20)
    for need in (0.5, 7.0, 100.0, 250.0):
        M = select_M(need, 1.0, table)
        assert table.beta_bar(M) >= need
        assert M == 1 or table.beta_bar(M - 1) < need
    assert select_M(1e9, 1.0, table) == 20


def test_scheme_table_bounds():
    table = SchemeTable(M_max=3)
    with pytest.raises(KeyError):
        table[4]
    assert len(table) == 3


def test_config_validation():
    with pytest.raises(ValueError):
        IntegrationConfig(safe=1.5)
    with pytest.raises(ValueError):
        IntegrationConfig(tol=0)
    with pytest.raises(ValueError):
        IntegrationConfig(M_max=300)


def test_power_iteration_on_laplacian():
    prob = heat_1d_analytic(64)
    est, v, converged = power_iteration(prob.system.rhs, prob.w0, 0.0)
    assert converged
    assert 0.9 * prob.rho_formula < est <= prob.rho_formula * (1 + 1e-6)
    rho = estimate_spectral_radius(prob.system, prob.w0, 0.0)
    assert rho == pytest.approx(1.05 * est)


def test_power_iteration_nonconvergence_is_conservative():
    # J = [[0, 3], [-1, 0]] maps e1 -> -e2 -> -3 e1, so |J v| alternates 1, 3, 1, ...
    def rhs(t, w):
        return np.array([3.0 * w[1], -1.0 * w[0]])

    est, _, converged = power_iteration(rhs, np.zeros(2), 0.0, v0=np.array([1.0, 0.0]))
    assert not converged
    sys_ = SemiDiscreteSystem(2, rhs)
    assert estimate_spectral_radius(sys_, np.zeros(2), 0.0, v0=np.array([1.0, 0.0])) == pytest.approx(1.5 * 3.0)


def test_supplied_spectral_radius():
    sys_ = SemiDiscreteSystem(1, lambda t, w: -w, spectral_radius=lambda t, w: 2.0)
    assert estimate_spectral_radius(sys_, np.ones(1), 0.0) == pytest.approx(2.1)


def test_integrate_heat_accuracy():
    prob = heat_1d_analytic(64)
    w, stats = integrate(prob.system, 0.0, 0.1, prob.w0, IntegrationConfig(tol=1e-8))
    assert np.max(np.abs(w - prob.exact(0.1))) < 1e-6
    assert stats.steps_accepted == sum(1 for h in stats.history if h[4])
    assert stats.rhs_evaluations == sum(2 * h[3] for h in stats.history)


def test_integrate_lands_on_t_end():
    prob = quadratic_decay()
    w, stats = integrate(prob.system, 0.0, 1.0, prob.w0, IntegrationConfig(tol=1e-6))
    accepted = [h for h in stats.history if h[4]]
    assert accepted[-1][0] + accepted[-1][1] == pytest.approx(1.0, abs=1e-12)
    assert w[0] == pytest.approx(0.5, abs=1e-5)


def test_integrate_tolerance_proportionality():
    prob = heat_1d_analytic(32)
    errs = []
    for tol in (1e-3, 1e-5, 1e-7):
        w, _ = integrate(prob.system, 0.0, 0.1, prob.w0, IntegrationConfig(tol=tol))
        errs.append(np.max(np.abs(w - prob.exact(0.1))))
    assert errs[0] > errs[1] > errs[2]


def test_integrate_rejects_backwards():
    with pytest.raises(ValueError):
        integrate(SemiDiscreteSystem(1, lambda t, w: -w), 1.0, 0.0, np.ones(1))


def test_integrate_gives_up_on_blowup():
    sys_ = SemiDiscreteSystem(1, lambda t, w: w * w, spectral_radius=lambda t, w: 2 * abs(w[0]))
    with np.errstate(all="ignore"):
        with pytest.raises(IntegrationError):
            integrate(sys_, 0.0, 2.0, np.ones(1), IntegrationConfig(tol=1e-6))


def test_integrate_fixed():
    w = integrate_fixed(lambda rhs, w, t, T: w + T * rhs(t, w), lambda t, w: -w, 0.0, 1.0, np.ones(1), 0.25)
    assert w[0] == pytest.approx(0.75**4)
    with pytest.raises(ValueError):
        integrate_fixed(None, None, 0.0, 1.0, np.ones(1), 0.3)
