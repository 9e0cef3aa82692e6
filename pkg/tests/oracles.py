"""Independent high-precision oracles shared by the test modules."""

import math

import mpmath

mpmath.mp.dps = 30


def gamma_oracle(a, b, p, q, k):
    """Settling bound from the closed form, evaluated with 30-digit Gamma."""
    a, b, p, q, k = map(mpmath.mpf, (a, b, p, q, k))
    mp_ = (1 - k * p) / (q - p)
    mq = (q * k - 1) / (q - p)
    return mpmath.gamma(mp_) * mpmath.gamma(mq) / (a**k * mpmath.gamma(k) * (q - p)) * (a / b) ** mp_


def integral_oracle(a, b, p, q, k, x0=mpmath.inf, x_start=0):
    """Settling time as int_{x_start}^{x0} dx / f(x) for the scalar field f.

    The substitutions x = s^m on [0, 1] and x = s^-n on [1, inf) make both
    end-point behaviours (x^-kp at 0, x^-kq at infinity) smooth.
    """
    a, b, p, q, k = map(mpmath.mpf, (a, b, p, q, k))
    inv_f = lambda x: 1 / (a * x**p + b * x**q) ** k

    def head(x1):
        m = math.ceil(1 / (1 - k * p)) + 1
        return mpmath.quad(lambda s: m * s ** (m - 1) * inv_f(s**m), [0, mpmath.mpf(x1) ** (1 / mpmath.mpf(m))])

    def tail(x1):
        n = math.ceil(1 / (k * q - 1)) + 1
        return mpmath.quad(lambda s: n * s ** (-n - 1) * inv_f(s**-n), [0, mpmath.mpf(x1) ** (-1 / mpmath.mpf(n))])

    def from_zero(x1):
        if x1 <= 1:
            return head(x1)
        return head(1) + tail(1) - (tail(x1) if x1 != mpmath.inf else 0)

    return from_zero(x0) - (from_zero(x_start) if x_start else 0)
