import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp, trapezoid

from ftconsensus.time_scaling import (
    ExponentialProfile,
    GainSchedule,
    exponential_kappa_hat_closed_form,
    kappa_hat,
    kappa_hat_dot,
    psi,
    psi_inverse,
)

# velocity, position and controller windows of the bundled time-varying scenario
WINDOWS = [(220.0, 0.016, 0.1), (90.0, 0.055, 0.9), (1.8, 1.5, 2.0)]


def schedule(rate=220.0, T=0.016, T_c=0.1, t0=0.0):
    return GainSchedule(ExponentialProfile(rate), t0, T_c, T)


def test_eta_values():
    assert schedule().eta == pytest.approx(1 - math.exp(-3.52), rel=1e-15)
    assert schedule().eta * 0.1 == pytest.approx(0.09704, abs=5e-6)
    assert schedule(90, 0.055, 0.9).eta * 0.9 == pytest.approx(0.89363, abs=1e-5)
    assert schedule(1.8, 1.5, 2.0).eta == pytest.approx(0.93279, abs=5e-6)


def test_psi_examples():
    s = schedule()
    assert psi(0.0, s) == 0.0
    assert psi(0.016, s) == pytest.approx(0.1, rel=1e-12)
    assert psi_inverse(0.0, s) == 0.0
    assert psi_inverse(0.1, s) == pytest.approx(0.016, rel=1e-10)


def test_psi_closed_form_against_quadrature():
    s = schedule()
    for tau in (1e-4, 3e-3, 0.02):
        taus = np.linspace(0, tau, 20001)
        phi = np.array([s.phi(x) for x in taus])
        assert psi(tau, s) == pytest.approx(s.T_c * trapezoid(phi, taus), rel=1e-7)


@given(st.floats(0, 1), st.floats(0, 1))
def test_psi_strictly_increasing(a, b):
    s = schedule()
    lo, hi = sorted((a * 0.05, b * 0.05))
    if hi > lo:
        assert psi(hi, s) > psi(lo, s)


def test_psi_round_trip():
    s = schedule()
    for x in np.linspace(0, 0.999 * s.psi_limit, 100):
        assert psi(psi_inverse(x, s), s) == pytest.approx(x, abs=1e-10)


def test_psi_inverse_domain():
    s = schedule()
    with pytest.raises(ValueError):
        psi_inverse(s.psi_limit, s)
    with pytest.raises(ValueError):
        psi_inverse(-1e-9, s)
    with pytest.raises(ValueError):
        psi(-1.0, s)


def test_kappa_hat_examples():
    s = schedule()
    assert kappa_hat(-1e-3, s) == 1.0
    assert kappa_hat(s.window_end, s) == 1.0
    assert kappa_hat(5.0, s) == 1.0
    assert kappa_hat(0.0, s) == pytest.approx(s.eta / 22.0, rel=1e-12)
    assert kappa_hat(0.0, s) == pytest.approx(0.04411, abs=1e-5)


@pytest.mark.parametrize("rate, T, T_c", WINDOWS)
def test_kappa_hat_generic_matches_closed_form(rate, T, T_c):
    s = schedule(rate, T, T_c, t0=0.3)
    for t in np.linspace(0.2, s.window_end + 0.1, 400):
        expected = exponential_kappa_hat_closed_form(t, rate, 0.3, T_c, T)
        assert kappa_hat(t, s) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("rate, T, T_c", WINDOWS)
def test_kappa_hat_dot_finite_differences(rate, T, T_c):
    s = schedule(rate, T, T_c, t0=0.2)
    ts = np.linspace(s.t0, s.window_end, 52)[1:-1]
    for t in ts:
        h = 1e-6 * s.eta * s.T_c
        fd = (kappa_hat(t + h, s) - kappa_hat(t - h, s)) / (2 * h)
        assert kappa_hat_dot(t, s) == pytest.approx(fd, rel=1e-5)


def test_kappa_hat_dot_boundaries():
    s = schedule()
    assert kappa_hat_dot(-1.0, s) == 0.0
    assert kappa_hat_dot(1.0, s) == 0.0
    assert kappa_hat_dot(0.0, s) == pytest.approx(s.eta**2 / (220 * 0.1**2), rel=1e-12)
    assert kappa_hat_dot(s.window_end, s) == 0.0
    assert kappa_hat_dot(s.window_end, s, left=True) > 0.0


@pytest.mark.parametrize("rate, T, T_c", WINDOWS)
def test_bounds_and_monotonicity(rate, T, T_c):
    s = schedule(rate, T, T_c)
    lo = min(1.0, s.eta / (rate * T_c))
    hi = max(1.0, s.eta / (rate * T_c * (1 - s.eta**2)))
    values = np.array([kappa_hat(t, s) for t in np.linspace(-0.1, s.window_end + 0.1, 3001)])
    assert values.min() >= lo * (1 - 1e-12)
    assert values.max() <= hi * (1 + 1e-12)
    inside = np.array([kappa_hat(t, s) for t in np.linspace(0, s.window_end, 3001)[:-1]])
    assert np.all(np.diff(inside) >= 0)
    assert s.supremum() == pytest.approx(hi, rel=1e-12)


def test_rho_phi_identity():
    s = schedule()
    for tau in np.linspace(1e-4, 0.05, 50):
        assert s.rho(tau) * s.phi(tau) * s.T_c == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("rate, T, T_c", WINDOWS)
def test_left_limit_at_window_end_is_window_supremum(rate, T, T_c):
    s = schedule(rate, T, T_c)
    closed = s.eta / (rate * T_c * (1 - s.eta**2))
    assert s.window_supremum() == pytest.approx(closed, rel=1e-12)
    assert kappa_hat(s.window_end, s, left=True) == pytest.approx(closed, rel=1e-12)
    assert s.supremum() == pytest.approx(max(1.0, closed), rel=1e-12)


def test_unbounded_shape_rejected():
    with pytest.raises(ValueError, match="unbounded"):
        schedule(rate=1e3, T=1.0)
    with pytest.raises(ValueError):
        ExponentialProfile(0.0)
    with pytest.raises(ValueError):
        schedule(T_c=0.0)


def test_time_dilation_matches_tau_time():
    """x' = kappa_hat(t) f(x) in t equals the tau-time solution read through psi."""
    s = schedule(rate=3.0, T=0.5, T_c=1.0)
    f = lambda x: -(np.abs(x) ** 0.75 + 2 * np.abs(x) ** 1.5) ** 0.5 * np.sign(x) - 0.3 * x
    tau_end = psi_inverse(s.eta * s.T_c * 0.999, s)
    sol_tau = solve_ivp(lambda tau, x: f(x), (0, tau_end), [2.0], rtol=1e-11, atol=1e-12, dense_output=True)
    sol_t = solve_ivp(
        lambda t, x: kappa_hat(t, s) * f(x), (0, s.eta * s.T_c * 0.999), [2.0], rtol=1e-11, atol=1e-12, dense_output=True
    )
    for t in np.linspace(0, s.eta * s.T_c * 0.999, 60):
        assert sol_t.sol(t)[0] == pytest.approx(sol_tau.sol(psi_inverse(t, s))[0], abs=1e-4)
