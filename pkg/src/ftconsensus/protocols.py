"""Right-hand sides of the leader, observer and tracking-controller laws.

All functions are vectorized over agents: per-agent quantities are 1-D arrays
of length N. The ``sign`` argument selects the switching function (exact sign
or a boundary-layer saturation); it defaults to ``numpy.sign`` with
``sign(0) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fixed_time_math import ControllerConstants, FixedTimeParams, controller_constants, settling_bound
from .graph_topology import ConnectionMatrices
from .time_scaling import ExponentialProfile, GainSchedule

CONTROLLER_START_MODES = ("immediate", "after_observer")


@dataclass(frozen=True)
class Signal:
    """Closed-form scalar signal ``amplitude * f(freq * t + phase)`` with ``f`` in {sin, cos}.

    ``kind="constant"`` ignores ``freq`` and ``phase``.
    """

    kind: str = "constant"
    amplitude: float = 0.0
    freq: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "sin", "cos"):
            raise ValueError(f"unknown signal kind {self.kind!r}; expected constant, sin or cos")

    def __call__(self, t: float) -> float:
        if self.kind == "sin":
            return self.amplitude * math.sin(self.freq * t + self.phase)
        if self.kind == "cos":
            return self.amplitude * math.cos(self.freq * t + self.phase)
        return self.amplitude

    @property
    def bound(self) -> float:
        """``sup_t |signal(t)|``."""
        return abs(self.amplitude)


@dataclass(frozen=True)
class LeaderModel:
    u0: Signal
    u0_max: float
    x0_init: float
    v0_init: float

    def __post_init__(self):
        if self.u0_max < self.u0.bound:
            raise ValueError(f"u0_max={self.u0_max} is below the leader input amplitude {self.u0.bound}")


@dataclass(frozen=True)
class DisturbanceModel:
    """Per-agent matched disturbances ``Delta_i(t)`` with bounds ``delta_i``."""

    signals: tuple[Signal, ...]
    delta: tuple[float, ...]
    _amp: np.ndarray = field(init=False, repr=False, compare=False)
    _freq: np.ndarray = field(init=False, repr=False, compare=False)
    _phase: np.ndarray = field(init=False, repr=False, compare=False)
    _kind: np.ndarray = field(init=False, repr=False, compare=False)
    _all_sin: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
        if len(self.signals) != len(self.delta):
            raise ValueError("one disturbance bound per agent signal is required")
        for i, (s, d) in enumerate(zip(self.signals, self.delta), start=1):
            if d < s.bound:
                raise ValueError(f"agent {i}: delta={d} below disturbance amplitude {s.bound}")
        object.__setattr__(self, "_amp", np.array([s.amplitude for s in self.signals], dtype=float))
        object.__setattr__(self, "_freq", np.array([s.freq for s in self.signals], dtype=float))
        object.__setattr__(self, "_phase", np.array([s.phase for s in self.signals], dtype=float))
        codes = {"constant": 0, "sin": 1, "cos": 2}
        object.__setattr__(self, "_kind", np.array([codes[s.kind] for s in self.signals]))
        object.__setattr__(self, "_all_sin", bool(np.all(self._kind == 1)))

    @classmethod
    def zero(cls, n: int) -> DisturbanceModel:
        return cls(tuple(Signal() for _ in range(n)), (0.0,) * n)

    def __call__(self, t: float) -> np.ndarray:
        arg = self._freq * t + self._phase
        if self._all_sin:
            return self._amp * np.sin(arg)
        return self._amp * np.where(self._kind == 1, np.sin(arg), np.where(self._kind == 2, np.cos(arg), 1.0))


@dataclass(frozen=True)
class ObserverParams:
    """Distributed observer gains; ``kappa_x``/``kappa_v`` are per-agent arrays."""

    core: FixedTimeParams
    zeta_x: float
    zeta_v: float
    kappa_x: np.ndarray
    kappa_v: np.ndarray
    T_c1: float
    T_c2: float

    def __post_init__(self):
        for name in ("kappa_x", "kappa_v"):
            arr = np.array(getattr(self, name), dtype=float).ravel()
            if np.any(arr <= 0):
                raise ValueError(f"{name} must be positive")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.zeta_x < 0 or self.zeta_v < 0:
            raise ValueError("zeta_x and zeta_v must be nonnegative")
        if not (self.T_c1 > 0 and self.T_c2 > 0):
            raise ValueError("T_c1 and T_c2 must be positive")

    def __eq__(self, other):
        if not isinstance(other, ObserverParams):
            return NotImplemented
        return (
            self.core == other.core
            and (self.zeta_x, self.zeta_v, self.T_c1, self.T_c2) == (other.zeta_x, other.zeta_v, other.T_c1, other.T_c2)
            and np.array_equal(self.kappa_x, other.kappa_x)
            and np.array_equal(self.kappa_v, other.kappa_v)
        )

    __hash__ = None

    @property
    def T_o(self) -> float:
        return self.T_c1 + self.T_c2


@dataclass(frozen=True)
class ControllerParams:
    """Sliding-mode tracking controller gains."""

    alpha1: float
    beta1: float
    alpha2: float
    beta2: float
    p: float
    q: float
    k: float
    That_c1: float
    That_c2: float
    zeta: np.ndarray
    start: str = "immediate"
    constants: ControllerConstants = field(init=False, compare=False)
    _coeffs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.That_c1 > 0 and self.That_c2 > 0):
            raise ValueError("That_c1 and That_c2 must be positive")
        if self.start not in CONTROLLER_START_MODES:
            raise ValueError(f"controller start must be one of {CONTROLLER_START_MODES}, got {self.start!r}")
        zeta = np.array(self.zeta, dtype=float).ravel()
        if np.any(zeta < 0):
            raise ValueError("zeta_i must be nonnegative")
        zeta.setflags(write=False)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(
            self,
            "constants",
            controller_constants(self.alpha1, self.beta1, self.alpha2, self.beta2, self.p, self.q, self.k),
        )
        c = self.constants
        object.__setattr__(self, "_coeffs", (c.gamma1**2 / self.That_c1**2, c.gamma2 / self.That_c2))

    def __eq__(self, other):
        if not isinstance(other, ControllerParams):
            return NotImplemented
        names = ("alpha1", "beta1", "alpha2", "beta2", "p", "q", "k", "That_c1", "That_c2", "start")
        return all(getattr(self, n) == getattr(other, n) for n in names) and np.array_equal(self.zeta, other.zeta)

    __hash__ = None


@dataclass(frozen=True)
class NonAutoParams:
    """Three chained gain windows for the time-varying observer and controller.

    ``rho1`` shapes the velocity channel on ``[t0, t0 + eta1 T_c1)``, ``rho2``
    the position channel right after it, and ``rho3`` the controller on
    ``[T'_o, T'_o + eta3 T_c3)`` with ``T_c3 = That_c1 + That_c2``.
    """

    rho1: GainSchedule
    rho2: GainSchedule
    rho3: GainSchedule
    t0: float = 0.0

    @classmethod
    def build(
        cls,
        observer: ObserverParams,
        controller: ControllerParams,
        rates: tuple[float, float, float],
        shapes: tuple[float, float, float],
        t0: float = 0.0,
    ) -> NonAutoParams:
        """Chain the three windows from ``t0`` and the observer/controller time scales.

        ``controller.start`` decides ``T'_o``: ``t0`` when ``"immediate"``,
        the observer bound ``T_o`` when ``"after_observer"``.
        """
        rho1 = GainSchedule(ExponentialProfile(rates[0]), t0, observer.T_c1, shapes[0])
        rho2 = GainSchedule(ExponentialProfile(rates[1]), rho1.window_end, observer.T_c2, shapes[1])
        t_start = t0 if controller.start == "immediate" else rho2.window_end
        rho3 = GainSchedule(ExponentialProfile(rates[2]), t_start, controller.That_c1 + controller.That_c2, shapes[2])
        return cls(rho1, rho2, rho3, t0)

    @property
    def rates(self) -> tuple[float, float, float]:
        return (self.rho1.profile.rate, self.rho2.profile.rate, self.rho3.profile.rate)

    @property
    def shapes(self) -> tuple[float, float, float]:
        return (self.rho1.T, self.rho2.T, self.rho3.T)

    @property
    def T_velocity(self) -> float:
        """Bound on the velocity-estimate settling time, ``t0 + eta1 T_c1``."""
        return self.rho1.window_end

    @property
    def T_o(self) -> float:
        return self.rho2.window_end

    @property
    def T_o_prime(self) -> float:
        return self.rho3.t0

    @property
    def T_hat(self) -> float:
        return self.rho3.window_end

    @property
    def breakpoints(self) -> tuple[float, ...]:
        pts = {s.t0 for s in (self.rho1, self.rho2, self.rho3)} | {
            s.window_end for s in (self.rho1, self.rho2, self.rho3)
        }
        return tuple(sorted(pts))


# --- error signals -----------------------------------------------------------


def consensus_errors(xhat, vhat, x0: float, v0: float, topo: ConnectionMatrices):
    """Local disagreement ``e_{1,i}``, ``e_{2,i}`` seen by each follower.

    ``e_{1,i} = sum_j a_ij (xhat_j - xhat_i) + b_i (x0 - xhat_i)``; likewise
    for velocities. Equal to ``-M (xhat - x0 1)``.
    """
    xhat = np.asarray(xhat, dtype=float)
    vhat = np.asarray(vhat, dtype=float)
    if xhat.shape != (topo.n,) or vhat.shape != (topo.n,):
        raise ValueError(f"estimates must have shape ({topo.n},), got {xhat.shape} and {vhat.shape}")
    M, b = topo.leader_matrix, topo.leader_links
    # L 1 = 0, so -M (z - z0 1) = b z0 - M z
    return b * x0 - M @ xhat, b * v0 - M @ vhat


def error_coordinates_rhs(x_tilde, v_tilde, u0: float, params: ObserverParams, topo: ConnectionMatrices, sign=np.sign):
    """Observer error dynamics ``dz/dt = -Phi(M z)`` in ``(x_tilde, v_tilde)``."""
    z1 = topo.leader_matrix @ x_tilde
    z2 = topo.leader_matrix @ v_tilde
    core = params.core
    dx = v_tilde - params.kappa_x * (core.rate(z1) + params.zeta_x) * sign(z1)
    dv = -params.kappa_v * (core.rate(z2) + params.zeta_v) * sign(z2) - u0
    return dx, dv


# --- observers ---------------------------------------------------------------


def observer_rhs_autonomous(xhat, vhat, x0, v0, params: ObserverParams, topo: ConnectionMatrices, sign=np.sign):
    """Time derivatives ``(dxhat/dt, dvhat/dt)`` of the distributed observer.

    Each estimate moves toward its neighbours and the leader:
    ``dvhat_i = kappa_v [f(e_2i) + zeta_v] sign(e_2i)``, i.e.
    ``dv_tilde = -Phi_v(M v_tilde) - u0`` in error coordinates.
    """
    e1, e2 = consensus_errors(xhat, vhat, x0, v0, topo)
    core = params.core
    dxhat = vhat + params.kappa_x * (core.rate(e1) + params.zeta_x) * sign(e1)
    dvhat = params.kappa_v * (core.rate(e2) + params.zeta_v) * sign(e2)
    return dxhat, dvhat


def observer_rhs_nonautonomous(
    xhat, vhat, x0, v0, params: ObserverParams, na: NonAutoParams, topo: ConnectionMatrices, t: float,
    left: bool = False, sign=np.sign,
):
    """Observer with time-varying gains on the nonlinear terms.

    The velocity channel is scaled by ``rho1(t)`` and the position channel by
    ``rho2(t)``. The robustness terms ``zeta_x``, ``zeta_v`` are not scaled.
    """
    e1, e2 = consensus_errors(xhat, vhat, x0, v0, topo)
    core = params.core
    r1 = na.rho1.value(t, left)
    r2 = na.rho2.value(t, left)
    dxhat = vhat + params.kappa_x * (r2 * core.rate(e1) + params.zeta_x) * sign(e1)
    dvhat = params.kappa_v * (r1 * core.rate(e2) + params.zeta_v) * sign(e2)
    return dxhat, dvhat


class StackedObserver:
    """Observer evaluated on the stacked estimate ``[xhat; vhat]`` in one pass.

    Computes the same law as :func:`observer_rhs_autonomous` (and its
    time-varying variant through ``r_x``, ``r_v``) with half the array
    operations; the simulator calls it once per stage.
    """

    def __init__(self, params: ObserverParams, topo: ConnectionMatrices, sign=np.sign):
        n = topo.n
        M, b = topo.leader_matrix, topo.leader_links
        self.n = n
        self.M2 = np.zeros((2 * n, 2 * n))
        self.M2[:n, :n] = M
        self.M2[n:, n:] = M
        self.B2 = np.zeros((2 * n, 2))
        self.B2[:n, 0] = b
        self.B2[n:, 1] = b
        self.kappa = np.concatenate((params.kappa_x, params.kappa_v))
        self.zeta = np.repeat([params.zeta_x, params.zeta_v], n)
        self.core = params.core.as_tuple()
        self.sign = sign

    def __call__(self, est: np.ndarray, leader: np.ndarray, r_x: float = 1.0, r_v: float = 1.0) -> np.ndarray:
        """``d/dt [xhat; vhat]`` given ``est = [xhat; vhat]`` and ``leader = [x0, v0]``."""
        a, b, p, q, k = self.core
        n = self.n
        e = self.B2 @ leader - self.M2 @ est
        ae = np.abs(e)
        f = (a * ae**p + b * ae**q) ** k
        if r_x != 1.0:
            f[:n] *= r_x
        if r_v != 1.0:
            f[n:] *= r_v
        out = self.kappa * (f + self.zeta) * self.sign(e)
        out[:n] += est[n:]
        return out


# --- controllers -------------------------------------------------------------


def sliding_variable(e_x, e_v, params: ControllerParams):
    """``sigma = e_v + [ [e_v]^2 + (gamma1/That_c1)^2 (alpha1 e_x + beta1 e_x^3) ]^{1/2}``.

    The bracket ``[.]^r`` is the signed power.
    """
    c = params.constants.gamma1**2 / params.That_c1**2
    s = e_v * np.abs(e_v) + c * (params.alpha1 * e_x + params.beta1 * e_x * e_x * e_x)
    return e_v + np.sqrt(np.abs(s)) * np.sign(s)


def sliding_surface_velocity(e_x, params: ControllerParams):
    """``e_v`` on ``sigma = 0``: ``-(gamma1/That_c1) ((alpha1|e_x| + beta1|e_x|^3) / 2)^{1/2} sign(e_x)``.

    Solving ``sigma = 0`` with the signed square gives ``2 e_v^2 = (gamma1/That_c1)^2 (...)``,
    so the reduced dynamics run ``sqrt(2)`` slower than the fixed-time system
    whose bound is ``That_c1``.
    """
    ax = np.abs(e_x)
    c = params.constants.gamma1 / params.That_c1
    return -c * np.sqrt(0.5 * (params.alpha1 * ax + params.beta1 * ax**3)) * np.sign(e_x)


def control_autonomous(e_x, e_v, params: ControllerParams, sign=np.sign):
    """Sliding-mode tracking control ``u_i`` for tracking errors ``(e_x, e_v)``."""
    c_slide, c_reach = params._coeffs
    ex2 = e_x * e_x
    s = e_v * np.abs(e_v) + c_slide * e_x * (params.alpha1 + params.beta1 * ex2)
    sigma = e_v + np.sqrt(np.abs(s)) * np.sign(s)
    a_s = np.abs(sigma)
    reaching = c_reach * (params.alpha2 * a_s**params.p + params.beta2 * a_s**params.q) ** params.k
    compensation = 0.5 * c_slide * (params.alpha1 + 3 * params.beta1 * ex2)
    return -(reaching + compensation + params.zeta) * sign(sigma)


def control_nonautonomous(e_x, e_v, params: ControllerParams, na: NonAutoParams, t: float, left: bool = False, sign=np.sign):
    """Time-varying tracking control.

    Zero before ``T'_o``; inside the ``rho3`` window
    ``rho3^2 u_auto(e_x, e_v / rho3) + (drho3/dt / rho3) e_v``; afterwards the
    autonomous law.
    """
    start = na.T_o_prime
    if t < start or (left and t == start):
        return np.zeros_like(np.asarray(e_x, dtype=float) * params.zeta)
    if not na.rho3.in_window(t, left):
        return control_autonomous(e_x, e_v, params, sign)
    r = na.rho3.value(t, left)
    r_dot = na.rho3.derivative(t, left)
    return r * r * control_autonomous(e_x, e_v / r, params, sign) + (r_dot / r) * e_v


# --- gain validation ---------------------------------------------------------


@dataclass(frozen=True)
class ObserverGainReport:
    gamma_rho: float
    lambda_min: float
    n_agents: int
    kappa_x: float
    kappa_v: float
    zeta_v: float
    kappa_x_min: float
    kappa_v_min: float
    zeta_v_min: float
    u0_max: float
    checks: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def violations(self) -> list[str]:
        return [name for name, passed in self.checks.items() if not passed]


def minimal_observer_gains(core: FixedTimeParams, topo: ConnectionMatrices, T_c1: float, T_c2: float) -> tuple[float, float]:
    """Smallest uniform ``(kappa_x, kappa_v)`` meeting the observer settling conditions."""
    g = settling_bound(core)
    n = topo.n
    return n * g / (topo.lambda_min * T_c2), n * g / (topo.lambda_min * T_c1)


def validate_observer_gains(params: ObserverParams, topo: ConnectionMatrices, leader: LeaderModel) -> ObserverGainReport:
    """Check the three observer gain inequalities and report the minimal compliant gains."""
    g = settling_bound(params.core)
    kx_min, kv_min = minimal_observer_gains(params.core, topo, params.T_c1, params.T_c2)
    kx = float(np.min(params.kappa_x))
    kv = float(np.min(params.kappa_v))
    if len(params.kappa_x) != topo.n or len(params.kappa_v) != topo.n:
        raise ValueError(f"observer gains must have one entry per agent ({topo.n})")
    zeta_v_min = leader.u0_max / kv
    checks = {
        "kappa_x >= N gamma / (lambda_min T_c2)": kx >= kx_min,
        "kappa_v >= N gamma / (lambda_min T_c1)": kv >= kv_min,
        "kappa_v zeta_v >= u0_max": kv * params.zeta_v >= leader.u0_max,
    }
    return ObserverGainReport(
        gamma_rho=g,
        lambda_min=topo.lambda_min,
        n_agents=topo.n,
        kappa_x=kx,
        kappa_v=kv,
        zeta_v=params.zeta_v,
        kappa_x_min=kx_min,
        kappa_v_min=kv_min,
        zeta_v_min=zeta_v_min,
        u0_max=leader.u0_max,
        checks=checks,
    )


@dataclass(frozen=True)
class ControllerGainReport:
    gamma1: float
    gamma2: float
    zeta: np.ndarray
    zeta_min: np.ndarray
    T_o_prime: float
    T_hat_c: float
    checks: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def violations(self) -> list[str]:
        return [name for name, passed in self.checks.items() if not passed]


def validate_controller_gains(
    params: ControllerParams, leader: LeaderModel, disturbance: DisturbanceModel, T_o_prime: float = 0.0
) -> ControllerGainReport:
    """Check ``zeta_i >= u0_max + delta_i`` and the exponent constraints.

    ``T_hat_c = T'_o + That_c1 + That_c2`` is reported alongside.
    """
    delta = np.asarray(disturbance.delta, dtype=float)
    if len(params.zeta) != len(delta):
        raise ValueError(f"controller zeta has {len(params.zeta)} entries for {len(delta)} agents")
    zeta_min = leader.u0_max + delta
    checks = {
        "zeta_i >= u0_max + delta_i": bool(np.all(params.zeta >= zeta_min)),
        "k' p' < 1": params.k * params.p < 1,
        "k' q' > 1": params.k * params.q > 1,
    }
    return ControllerGainReport(
        gamma1=params.constants.gamma1,
        gamma2=params.constants.gamma2,
        zeta=params.zeta,
        zeta_min=zeta_min,
        T_o_prime=T_o_prime,
        T_hat_c=T_o_prime + params.That_c1 + params.That_c2,
        checks=checks,
    )
