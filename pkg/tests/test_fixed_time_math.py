import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftconsensus.fixed_time_math import (
    ExponentConstraintError,
    FixedTimeParams,
    check_norm_monotonicity,
    check_power_mean_inequality,
    controller_constants,
    gamma_fn,
    power_mean_sides,
    settling_bound,
    signed_pow,
)
from ftconsensus.sim_engine import simulate_scalar_fixed_time
from oracles import gamma_oracle, integral_oracle

@st.composite
def valid_params(draw):
    k = draw(st.floats(0.2, 2.0))
    p = draw(st.floats(0.05, 0.95)) / k
    q = draw(st.floats(1.05, 4.0)) / k
    return FixedTimeParams(draw(st.floats(0.1, 10.0)), draw(st.floats(0.1, 10.0)), p, q, k)


@pytest.mark.parametrize("x, r, expected", [(0.0, 0.5, 0.0), (-4.0, 0.5, -2.0), (-2.0, 3.0, -8.0)])
def test_signed_pow_examples(x, r, expected):
    assert signed_pow(x, r) == expected


def test_signed_pow_domain():
    with pytest.raises(ValueError):
        signed_pow(0.0, 0.0)
    with pytest.raises(ValueError):
        signed_pow(0.0, -1.0)
    assert signed_pow(-2.0, -1.0) == -0.5


def test_signed_pow_arrays():
    np.testing.assert_array_equal(signed_pow(np.array([-4.0, 0.0, 9.0]), 0.5), [-2.0, 0.0, 3.0])


@given(st.floats(-1e6, 1e6), st.floats(0.01, 5.0))
def test_signed_pow_odd(x, r):
    assert signed_pow(-x, r) == -signed_pow(x, r)


@pytest.mark.parametrize("z", [1e-3, 1 / 6, 0.25, 0.5, 1.0, 3.7, 12.5, 50.0])
def test_gamma_against_mpmath(z):
    assert gamma_fn(z) == pytest.approx(float(mpmath.gamma(z)), rel=1e-10)


def test_gamma_examples():
    assert gamma_fn(1.0) == 1.0
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert round(gamma_fn(1 / 6), 4) == 5.5663


@pytest.mark.parametrize("z", [0.0, -1.0, -0.5])
def test_gamma_rejects_nonpositive(z):
    with pytest.raises(ValueError):
        gamma_fn(z)


@given(st.floats(1e-3, 49.0))
def test_gamma_recurrence(z):
    assert gamma_fn(z + 1) == pytest.approx(z * gamma_fn(z), rel=1e-9)


def test_settling_bound_golden():
    value = settling_bound(FixedTimeParams(1, 2, 1.5, 3, 0.5))
    assert value == pytest.approx(float(gamma_oracle(1, 2, 1.5, 3, 0.5)), rel=1e-9)
    assert value == pytest.approx(float(integral_oracle(1, 2, 1.5, 3, 0.5)), rel=1e-9)
    assert round(value, 3) == 4.997


def test_settling_bound_pi_case():
    assert settling_bound(FixedTimeParams(1, 1, 0.5, 1.5, 1)) == pytest.approx(math.pi, rel=1e-10)


def test_settling_bound_decreases_with_alpha():
    base = FixedTimeParams(1, 2, 1.5, 3, 0.5)
    faster = FixedTimeParams(4, 2, 1.5, 3, 0.5)
    assert settling_bound(faster) < settling_bound(base)


@settings(max_examples=25, deadline=None)
@given(valid_params())
def test_settling_bound_equals_integral(params):
    expected = integral_oracle(*params.as_tuple())
    assert settling_bound(params) == pytest.approx(float(expected), rel=1e-7)


@pytest.mark.parametrize(
    "args, match",
    [((1, 1, 2.5, 3, 0.5), "k\\*p < 1"), ((1, 1, 0.5, 1.5, 0.5), "k\\*q > 1"), ((0, 1, 0.5, 3, 0.5), "alpha"), ((1, 1, 0.5, 3, -1), "k")],
)
def test_params_validation(args, match):
    with pytest.raises(ExponentConstraintError, match=match):
        FixedTimeParams(*args)


def test_controller_constants_examples():
    c = controller_constants(0.25, 4, 0.25, 4, 1.5, 3, 0.5)
    g14 = mpmath.gamma(0.25)
    gamma1 = g14**2 / (2 * mpmath.sqrt(0.25) * mpmath.gamma(0.5)) * (mpmath.mpf(0.25) / 4) ** 0.25
    assert c.gamma1 == pytest.approx(float(gamma1), rel=1e-12)
    assert round(c.gamma1, 4) == 3.7081
    assert c.m_p == pytest.approx(1 / 6)
    assert c.m_q == pytest.approx(1 / 3)
    assert c.gamma2 == pytest.approx(float(gamma_oracle(0.25, 4, 1.5, 3, 0.5)), rel=1e-10)
    assert round(c.gamma2, 3) == 7.067


def test_gamma1_unit_weights_coincide():
    a = controller_constants(1, 1, 0.25, 4, 1.5, 3, 0.5).gamma1
    b = controller_constants(0.25, 4, 0.25, 4, 1.5, 3, 0.5).gamma1
    assert a == pytest.approx(b, rel=1e-14)


def test_gamma1_is_reduced_system_bound():
    # sliding surface dynamics de/dt = -(alpha1 |e| + beta1 |e|^3)^(1/2) sign(e)
    c = controller_constants(0.25, 4, 0.25, 4, 1.5, 3, 0.5)
    assert c.gamma1 == pytest.approx(float(integral_oracle(0.25, 4, 1, 3, 0.5)), rel=1e-9)


def test_controller_constants_reject_bad_exponents():
    with pytest.raises(ExponentConstraintError):
        controller_constants(0.25, 4, 0.25, 4, 3.0, 4.0, 0.5)
    with pytest.raises(ExponentConstraintError):
        controller_constants(-1, 4, 0.25, 4, 1.5, 3, 0.5)


def test_power_mean_examples():
    rho = FixedTimeParams(1, 2, 1.5, 3, 0.5)
    assert check_power_mean_inequality([2.5, 2.5, 2.5], rho)
    lhs, rhs = power_mean_sides([1, 2, 3], rho)
    f = lambda a: (a**1.5 + 2 * a**3) ** 0.5
    assert lhs == pytest.approx((f(1) + 2 * f(2) + 3 * f(3)) / 3)
    assert rhs == pytest.approx(2 * f(2))
    assert check_power_mean_inequality([1, 2, 3], rho)
    assert check_power_mean_inequality([1e-6, 1e6], FixedTimeParams(1, 1, 0.5, 2, 1))


def test_norm_monotonicity_examples():
    assert check_norm_monotonicity([3, 4], 2, 1)
    assert check_norm_monotonicity([1, 0, 0], 5, 0.5)
    z = np.random.default_rng(1).uniform(-10, 10, 8)
    assert check_norm_monotonicity(z, 3, 1.5)
    with pytest.raises(ValueError):
        check_norm_monotonicity([1, 2], 1, 2)


@pytest.mark.parametrize("x0", [1e-3, -1e-3, 1.0, -1.0, 1e6, -1e6])
def test_scalar_settling_within_bound(x0):
    params = FixedTimeParams(1, 2, 1.5, 3, 0.5)
    t = simulate_scalar_fixed_time(params, x0)
    assert t <= settling_bound(params) * (1 + 1e-3)


@pytest.mark.parametrize("x0", [1e-3, 1.0, 50.0])
def test_scalar_settling_matches_quadrature(x0):
    a, b, p, q, k = 1, 2, 1.5, 3, 0.5
    tol = 1e-9
    # the last step overshoots tol by at most rel_step * tol^(1 - kp) = 5.6e-6
    t = simulate_scalar_fixed_time(FixedTimeParams(a, b, p, q, k), x0, tol=tol, dt_near=1e-8, rel_step=1e-3)
    assert t == pytest.approx(float(integral_oracle(a, b, p, q, k, x0, x_start=tol)), abs=1e-5)
