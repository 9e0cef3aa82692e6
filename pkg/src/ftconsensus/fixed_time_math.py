"""Scalar primitives for fixed-time stability.

The scalar system ``dx/dt = -(alpha|x|^p + beta|x|^q)^k sign(x)`` with
``kp < 1 < kq`` reaches the origin before :func:`settling_bound` regardless of
``x(0)``. Every protocol gain in the package is derived from that bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ExponentConstraintError(ValueError):
    """Raised when fixed-time exponents violate ``k*p < 1 < k*q`` or positivity."""


def sign(x):
    """``sign`` with ``sign(0) = 0``; works on scalars and arrays."""
    return np.sign(x)


def signed_pow(x, r: float):
    """``|x|^r * sign(x)``, defined at ``x = 0`` only for ``r > 0``.

    Accepts scalars or arrays; returns the same kind.
    """
    if r <= 0 and np.any(np.asarray(x) == 0):
        raise ValueError(f"signed_pow(0, {r}) is undefined for r <= 0")
    out = np.abs(x) ** r * np.sign(x)
    return float(out) if np.ndim(out) == 0 else out


def gamma_fn(z: float) -> float:
    """Gamma function on the positive real axis."""
    if not z > 0:
        raise ValueError(f"gamma_fn is defined here only for z > 0, got {z}")
    return math.gamma(z)


@dataclass(frozen=True)
class FixedTimeParams:
    """Parameter vector ``(alpha, beta, p, q, k)`` of the scalar fixed-time system."""

    alpha: float
    beta: float
    p: float
    q: float
    k: float

    def __post_init__(self):
        for name in ("alpha", "beta", "p", "q", "k"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ExponentConstraintError(f"{name} must be positive and finite, got {value}")
        if not self.k * self.p < 1:
            raise ExponentConstraintError(f"constraint k*p < 1 violated: k*p = {self.k * self.p}")
        if not self.k * self.q > 1:
            raise ExponentConstraintError(f"constraint k*q > 1 violated: k*q = {self.k * self.q}")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.alpha, self.beta, self.p, self.q, self.k)

    def rate(self, x):
        """``(alpha|x|^p + beta|x|^q)^k``, the magnitude of the scalar vector field."""
        ax = np.abs(x)
        return (self.alpha * ax**self.p + self.beta * ax**self.q) ** self.k


def settling_bound(params: FixedTimeParams) -> float:
    """Upper bound ``gamma(rho)`` on the settling time of the scalar system."""
    a, b, p, q, k = params.as_tuple()
    m_p = (1 - k * p) / (q - p)
    m_q = (q * k - 1) / (q - p)
    return gamma_fn(m_p) * gamma_fn(m_q) / (a**k * gamma_fn(k) * (q - p)) * (a / b) ** m_p


@dataclass(frozen=True)
class ControllerConstants:
    gamma1: float
    gamma2: float
    m_p: float
    m_q: float


def controller_constants(alpha1, beta1, alpha2, beta2, p, q, k) -> ControllerConstants:
    """Constants ``gamma1`` (sliding-surface design) and ``gamma2`` (reaching phase).

    ``gamma1`` is the settling bound of the reduced system with exponents
    ``(1, 3, 1/2)``; ``gamma2`` is :func:`settling_bound` of ``(alpha2, beta2, p, q, k)``.
    """
    for name, value in (("alpha1", alpha1), ("beta1", beta1)):
        if not value > 0:
            raise ExponentConstraintError(f"{name} must be positive, got {value}")
    reaching = FixedTimeParams(alpha2, beta2, p, q, k)
    gamma1 = gamma_fn(0.25) ** 2 / (2 * alpha1**0.5 * gamma_fn(0.5)) * (alpha1 / beta1) ** 0.25
    return ControllerConstants(
        gamma1=gamma1,
        gamma2=settling_bound(reaching),
        m_p=(1 - k * p) / (q - p),
        m_q=(k * q - 1) / (q - p),
    )


def power_mean_sides(a, params: FixedTimeParams) -> tuple[float, float]:
    """Left and right sides of the power-mean inequality used in the observer analysis."""
    a = np.asarray(a, dtype=float)
    lhs = float(np.mean(a * params.rate(a)))
    m = float(np.mean(a))
    return lhs, m * float(params.rate(m))


def check_power_mean_inequality(a, params: FixedTimeParams, rtol: float = 1e-12) -> bool:
    """True iff ``mean(a_i f(a_i)) >= mean(a) f(mean(a))`` with ``f`` the fixed-time rate.

    ``rtol`` absorbs rounding when all ``a_i`` are equal and both sides coincide.
    """
    lhs, rhs = power_mean_sides(a, params)
    return lhs >= rhs * (1 - rtol)


def check_norm_monotonicity(z, l: float, r: float, rtol: float = 1e-12) -> bool:
    """True iff ``||z||_l <= ||z||_r`` for ``l > r > 0``."""
    if not l > r > 0:
        raise ValueError(f"need l > r > 0, got l={l}, r={r}")
    z = np.abs(np.asarray(z, dtype=float))
    scale = z.max(initial=0.0)
    if scale == 0:
        return True
    z = z / scale
    return float(np.sum(z**l) ** (1 / l)) <= float(np.sum(z**r) ** (1 / r)) * (1 + rtol)
