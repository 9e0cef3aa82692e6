"""Bounded time-varying gains obtained by reparametrizing time.

A profile ``Phi`` defines the time map ``t - t0 = psi(tau) = T_c * int_0^tau Phi``.
Running an autonomous vector field in ``tau`` and mapping back to ``t``
multiplies it by the gain ``kappa_hat(t) = rho(psi^{-1}(t - t0))`` with
``rho = 1 / (T_c * Phi)``. The gain is applied on the window
``[t0, t0 + eta * T_c)`` and equals 1 outside it, so it stays bounded.

Only the exponential profile ``Phi(tau) = a / eta * exp(-a tau)`` with
``eta = 1 - exp(-a T)`` is provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ExponentialProfile:
    """``Phi(tau) = rate / eta(T) * exp(-rate * tau)``."""

    rate: float
    kind: str = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"exponential profile rate must be positive, got {self.rate}")

    def eta(self, T: float) -> float:
        return -math.expm1(-self.rate * T)

    def phi(self, tau: float, T: float) -> float:
        return self.rate / self.eta(T) * math.exp(-self.rate * tau)

    def cumulative(self, tau: float, T: float) -> float:
        """``int_0^tau Phi``."""
        return -math.expm1(-self.rate * tau) / self.eta(T)

    def cumulative_limit(self, T: float) -> float:
        return 1.0 / self.eta(T)

    def inverse_cumulative(self, y: float, T: float) -> float:
        return -math.log1p(-self.eta(T) * y) / self.rate

    def log_slope(self, tau: float, T: float) -> float:
        """``Phi'(tau) / Phi(tau)``."""
        return -self.rate


GainProfile = ExponentialProfile


@dataclass(frozen=True)
class GainSchedule:
    """A gain window starting at ``t0`` with time scale ``T_c`` and shape parameter ``T``."""

    profile: GainProfile
    t0: float
    T_c: float
    T: float

    def __post_init__(self):
        if not self.T_c > 0:
            raise ValueError(f"T_c must be positive, got {self.T_c}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.eta < 1:
            raise ValueError(f"eta(T) rounds to 1 for rate={self.profile.rate}, T={self.T}; the gain would be unbounded")

    @property
    def eta(self) -> float:
        return self.profile.eta(self.T)

    @property
    def window_end(self) -> float:
        return self.t0 + self.eta * self.T_c

    @property
    def psi_limit(self) -> float:
        """Supremum of ``psi`` over ``tau >= 0``."""
        return self.T_c * self.profile.cumulative_limit(self.T)

    def phi(self, tau: float) -> float:
        return self.profile.phi(tau, self.T)

    def rho(self, tau: float) -> float:
        return 1.0 / (self.T_c * self.phi(tau))

    def in_window(self, t: float, left: bool = False) -> bool:
        """Membership in ``[t0, window_end)``; ``left=True`` takes the left limit at ``t``."""
        if left:
            return self.t0 < t <= self.window_end
        return self.t0 <= t < self.window_end

    def value(self, t: float, left: bool = False) -> float:
        return kappa_hat(t, self, left)

    def derivative(self, t: float, left: bool = False) -> float:
        return kappa_hat_dot(t, self, left)

    def window_supremum(self) -> float:
        """Left limit of the gain at the window end; its supremum inside the window."""
        return self.rho(psi_inverse(self.eta * self.T_c, self))

    def window_infimum(self) -> float:
        """Gain at the window start."""
        return self.rho(0.0)

    def supremum(self) -> float:
        """``sup_t kappa_hat``, including the value 1 outside the window."""
        return max(1.0, self.window_supremum(), self.window_infimum())

    def infimum(self) -> float:
        return min(1.0, self.window_supremum(), self.window_infimum())


def psi(tau: float, schedule: GainSchedule) -> float:
    """Time map ``psi(tau) = T_c * int_0^tau Phi``; strictly increasing."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    return schedule.T_c * schedule.profile.cumulative(tau, schedule.T)


def psi_inverse(t_rel: float, schedule: GainSchedule) -> float:
    """Inverse of :func:`psi` on ``[0, psi_limit)``."""
    if t_rel < 0 or t_rel >= schedule.psi_limit:
        raise ValueError(f"t_rel={t_rel} outside the range [0, {schedule.psi_limit}) of psi")
    return schedule.profile.inverse_cumulative(t_rel / schedule.T_c, schedule.T)


def kappa_hat(t: float, schedule: GainSchedule, left: bool = False) -> float:
    """Time-varying gain: ``rho(psi^{-1}(t - t0))`` inside the window, 1 outside.

    Args:
        left: evaluate the left limit at ``t``. Only matters at the window end,
            where the interior value is returned instead of 1.
    """
    if not schedule.in_window(t, left):
        return 1.0
    return schedule.rho(psi_inverse(t - schedule.t0, schedule))


def kappa_hat_dot(t: float, schedule: GainSchedule, left: bool = False) -> float:
    """Time derivative of :func:`kappa_hat`.

    Inside the window ``d/dt rho(tau(t)) = rho'(tau) * rho(tau) = -(Phi'/Phi) rho^2``.
    At ``t0`` the interior value is returned, at the window end the exterior
    value 0, unless ``left`` is set.
    """
    if not schedule.in_window(t, left):
        return 0.0
    tau = psi_inverse(t - schedule.t0, schedule)
    return -schedule.profile.log_slope(tau, schedule.T) * schedule.rho(tau) ** 2


def exponential_kappa_hat_closed_form(t: float, rate: float, t0: float, T_c: float, T: float) -> float:
    """``eta / (rate * (T_c - eta (t - t0)))`` inside the window, 1 outside."""
    eta = -math.expm1(-rate * T)
    if t0 <= t < t0 + eta * T_c:
        return eta / (rate * (T_c - eta * (t - t0)))
    return 1.0
