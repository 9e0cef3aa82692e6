"""Fixed-step integration of the leader, followers and distributed observers.

State vectors are laid out as ``[x0, v0, x(N), v(N), xhat(N), vhat(N)]``.
Steps are snapped to gain-window boundaries and controller activation times so
that no step straddles a switching instant; the last RK4 stage of a step that
ends on a boundary uses left limits of the time-varying gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import numpy as np

from .fixed_time_math import FixedTimeParams
from .graph_topology import ConnectionMatrices
from .protocols import (
    ControllerParams,
    StackedObserver,
    control_autonomous,
    control_nonautonomous,
    error_coordinates_rhs,
    observer_rhs_autonomous,
    observer_rhs_nonautonomous,
    sliding_variable,
)

if TYPE_CHECKING:
    from .scenario import ScenarioConfig

INTEGRATORS = ("rk4", "euler")
SIGN_MODES = ("exact", "boundary_layer")
CHANNELS = ("v_tilde", "x_tilde", "tracking", "consensus")


class NumericalAbort(RuntimeError):
    """Raised when a state component becomes NaN or infinite.

    Attributes:
        t: time of the offending step.
        channel: name of the first non-finite state block.
        trajectory: samples recorded before the abort.
    """

    def __init__(self, t: float, channel: str, trajectory: Trajectory | None = None):
        super().__init__(f"non-finite value in {channel} at t={t!r}")
        self.t = t
        self.channel = channel
        self.trajectory = trajectory


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-5
    horizon: float = 3.0
    integrator: str = "rk4"
    sign_mode: str = "exact"
    boundary_width: float = 1e-9
    record_stride: int = 1
    eps_settle: float = 1e-3

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.sign_mode not in SIGN_MODES:
            raise ValueError(f"sign_mode must be one of {SIGN_MODES}, got {self.sign_mode!r}")
        if not self.boundary_width > 0:
            raise ValueError("boundary_width must be positive")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be an integer >= 1, got {self.record_stride}")
        if not self.eps_settle > 0:
            raise ValueError("eps_settle must be positive")

    def sign_function(self) -> Callable:
        if self.sign_mode == "exact":
            return np.sign
        width = self.boundary_width
        return lambda e: np.clip(np.asarray(e) / width, -1.0, 1.0)


@dataclass
class WorldState:
    """Snapshot of the leader, followers and observer estimates at time ``t``."""

    t: float
    x0: float
    v0: float
    x: np.ndarray
    v: np.ndarray
    xhat: np.ndarray
    vhat: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.x0, self.v0], self.x, self.v, self.xhat, self.vhat)).astype(float)

    @classmethod
    def from_vector(cls, t: float, y: np.ndarray) -> WorldState:
        n = (len(y) - 2) // 4
        blocks = [np.array(y[2 + i * n : 2 + (i + 1) * n]) for i in range(4)]
        return cls(t, float(y[0]), float(y[1]), *blocks)


def _block_names(n: int) -> list[str]:
    return ["x0", "v0"] + [f"{name}_{i}" for name in ("x", "v", "xhat", "vhat") for i in range(1, n + 1)]


def rk4_step(rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """Classical RK4; the final stage is evaluated with left limits at ``t + h``."""
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + (h / 2) * k1)
    k3 = rhs(t + h / 2, y + (h / 2) * k2)
    k4 = rhs(t + h, y + h * k3, True)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def euler_step(rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    return y + h * rhs(t, y)


_STEPPERS = {"rk4": rk4_step, "euler": euler_step}


def step(world: WorldState, rhs, dt: float, integrator: str = "rk4") -> WorldState:
    """Advance a :class:`WorldState` by one step of ``rhs(t, y, left=False)``."""
    y = _STEPPERS[integrator](rhs, world.t, world.to_vector(), dt)
    if not np.all(np.isfinite(y)):
        raise NumericalAbort(world.t + dt, _first_bad_block(y))
    return WorldState.from_vector(world.t + dt, y)


def _first_bad_block(y: np.ndarray) -> str:
    names = _block_names((len(y) - 2) // 4)
    bad = np.flatnonzero(~np.isfinite(y))
    return names[int(bad[0])] if len(bad) else "none"


def time_grid(horizon: float, dt: float, breakpoints=()) -> np.ndarray:
    """Uniform grid of spacing ``dt`` that also contains every breakpoint in ``(0, horizon)``.

    Within each segment between consecutive breakpoints the nodes are
    ``a + k dt``; the step before a breakpoint is shortened to land on it.
    Remainders shorter than ``1e-6 dt`` are merged into the previous step.
    """
    pts = sorted({0.0, float(horizon)} | {float(b) for b in breakpoints if 0 < b < horizon})
    pieces = []
    for a, b in zip(pts[:-1], pts[1:]):
        n = int(math.floor((b - a) / dt))
        seg = a + dt * np.arange(n + 1)
        if b - seg[-1] > 1e-6 * dt:
            seg = np.append(seg, b)
        else:
            seg[-1] = b
        pieces.append(seg[:-1])
    pieces.append(np.array([pts[-1]]))
    return np.concatenate(pieces)


# --- scenario right-hand side ------------------------------------------------


def make_rhs(cfg: ScenarioConfig):
    """Build ``rhs(t, y, left=False)`` for a scenario (autonomous or time-varying)."""
    topo = cfg.matrices
    n = topo.n
    sx, sv, sxh, svh = (slice(2 + i * n, 2 + (i + 1) * n) for i in range(4))
    s_est = slice(2 + 2 * n, 2 + 4 * n)
    sign = cfg.sim.sign_function()
    u0 = cfg.leader.u0
    dist = cfg.disturbance
    ctl = cfg.controller
    observer = StackedObserver(cfg.observer, topo, sign)
    na = cfg.nonauto_params
    t_act = cfg.controller_activation_time
    zeros = np.zeros(n)

    def rhs(t: float, y: np.ndarray, left: bool = False) -> np.ndarray:
        x, v, xh, vh = y[sx], y[sv], y[sxh], y[svh]
        out = np.empty_like(y)
        out[0] = y[1]
        out[1] = u0(t)
        if na is None:
            out[s_est] = observer(y[s_est], y[:2])
            active = t > t_act or (t == t_act and not left)
            u = control_autonomous(x - xh, v - vh, ctl, sign) if active else zeros
        else:
            out[s_est] = observer(y[s_est], y[:2], na.rho2.value(t, left), na.rho1.value(t, left))
            u = control_nonautonomous(x - xh, v - vh, ctl, na, t, left, sign)
        out[sx] = v
        out[sv] = u + dist(t)
        return out

    return rhs


# --- trajectories and settling -----------------------------------------------


@dataclass
class Trajectory:
    """Sampled world states with derived error channels.

    ``states`` has one row per sample in the flat state layout.
    """

    times: np.ndarray
    states: np.ndarray
    n_agents: int
    controller: ControllerParams | None = None

    def _block(self, i: int) -> np.ndarray:
        n = self.n_agents
        return self.states[:, 2 + i * n : 2 + (i + 1) * n]

    def __len__(self) -> int:
        return len(self.times)

    @property
    def x0(self):
        return self.states[:, 0]

    @property
    def v0(self):
        return self.states[:, 1]

    @property
    def x(self):
        return self._block(0)

    @property
    def v(self):
        return self._block(1)

    @property
    def xhat(self):
        return self._block(2)

    @property
    def vhat(self):
        return self._block(3)

    @property
    def x_tilde(self):
        return self.xhat - self.x0[:, None]

    @property
    def v_tilde(self):
        return self.vhat - self.v0[:, None]

    @property
    def e_x(self):
        return self.x - self.xhat

    @property
    def e_v(self):
        return self.v - self.vhat

    @property
    def sigma(self):
        if self.controller is None:
            raise ValueError("sliding variable needs controller parameters")
        return sliding_variable(self.e_x, self.e_v, self.controller)

    def channel(self, name: str) -> np.ndarray:
        """Per-sample sup-norm of a named error channel."""
        if name == "v_tilde":
            return np.max(np.abs(self.v_tilde), axis=1)
        if name == "x_tilde":
            return np.max(np.abs(self.x_tilde), axis=1)
        if name == "tracking":
            return np.maximum(np.max(np.abs(self.e_x), axis=1), np.max(np.abs(self.e_v), axis=1))
        if name == "consensus":
            ex = self.x - self.x0[:, None]
            ev = self.v - self.v0[:, None]
            return np.maximum(np.max(np.abs(ex), axis=1), np.max(np.abs(ev), axis=1))
        raise KeyError(name)

    def columns(self) -> tuple[list[str], np.ndarray]:
        """Header and data matrix of the CSV export layout."""
        names = ["t", "x0", "v0"]
        blocks = [self.times[:, None], self.x0[:, None], self.v0[:, None]]
        per_agent = [self.x, self.v, self.xhat, self.vhat, self.x_tilde, self.v_tilde, self.e_x, self.e_v]
        labels = ["x", "v", "xhat", "vhat", "xtilde", "vtilde", "ex", "ev"]
        if self.controller is not None:
            per_agent.append(self.sigma)
            labels.append("sigma")
        for i in range(self.n_agents):
            for label, arr in zip(labels, per_agent):
                names.append(f"{label}_{i + 1}")
                blocks.append(arr[:, i : i + 1])
        return names, np.hstack(blocks)


def export_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    """Write the trajectory with full double precision and one header row."""
    path = Path(path)
    names, data = traj.columns()
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header=",".join(names), comments="")
    return path


def detect_settling(times, series, eps: float) -> float | None:
    """Earliest sample time after which the sup-norm of ``series`` stays below ``eps``.

    ``series`` may be 1-D (one value per sample) or 2-D (samples x components).
    Returns ``None`` when the final sample is not below ``eps``.
    """
    times = np.asarray(times, dtype=float)
    series = np.abs(np.asarray(series, dtype=float))
    if series.ndim == 2:
        series = series.max(axis=1)
    if len(series) == 0:
        raise ValueError("empty series")
    above = np.flatnonzero(series >= eps)
    if len(above) == 0:
        return float(times[0])
    last = above[-1]
    if last == len(series) - 1:
        return None
    return float(times[last + 1])


@dataclass(frozen=True)
class SettlingReport:
    eps: float
    times: dict
    horizon: float

    def found(self, channel: str) -> bool:
        return self.times[channel] is not None

    def __getitem__(self, channel: str) -> float | None:
        return self.times[channel]


class _SettlingMonitor:
    """Tracks, per channel, the last step at which the sup-norm was >= eps."""

    def __init__(self, n: int, eps: float):
        self.n = n
        self.eps = eps
        self.last_bad = {c: None for c in CHANNELS}
        self.next_time = {c: 0.0 for c in CHANNELS}

    def update(self, t: float, y: np.ndarray):
        n = self.n
        x0, v0 = y[0], y[1]
        x, v, xh, vh = (y[2 + i * n : 2 + (i + 1) * n] for i in range(4))
        norms = {
            "v_tilde": np.abs(vh - v0).max(),
            "x_tilde": np.abs(xh - x0).max(),
            "tracking": max(np.abs(x - xh).max(), np.abs(v - vh).max()),
            "consensus": max(np.abs(x - x0).max(), np.abs(v - v0).max()),
        }
        for c, val in norms.items():
            if val >= self.eps:
                self.last_bad[c] = t
                self.next_time[c] = None
            elif self.next_time[c] is None:
                self.next_time[c] = t

    def report(self, horizon: float) -> SettlingReport:
        return SettlingReport(self.eps, dict(self.next_time), horizon)


@dataclass
class SimResult:
    trajectory: Trajectory
    settling: SettlingReport
    steps: int
    wall_time: float = field(default=0.0, compare=False)


def initial_state(cfg: ScenarioConfig) -> np.ndarray:
    ic = cfg.initial
    return np.concatenate(
        ([cfg.leader.x0_init, cfg.leader.v0_init], ic.x, ic.v, ic.xhat, ic.vhat)
    ).astype(float)


def integrate(rhs, y0: np.ndarray, times: np.ndarray, integrator: str = "rk4", record_stride: int = 1, monitor=None):
    """Integrate over a prescribed grid, returning recorded times and states.

    The initial and final samples are always recorded.
    """
    stepper = _STEPPERS[integrator]
    y = np.array(y0, dtype=float)
    rec_t, rec_y = [times[0]], [y.copy()]
    if monitor is not None:
        monitor.update(times[0], y)
    last = len(times) - 1
    for k in range(last):
        t = times[k]
        y = stepper(rhs, t, y, times[k + 1] - t)
        if not np.isfinite(y).all():
            partial = (np.array(rec_t), np.array(rec_y))
            raise NumericalAbort(float(times[k + 1]), _first_bad_block(y), partial)
        if monitor is not None:
            monitor.update(times[k + 1], y)
        if (k + 1) % record_stride == 0 or k + 1 == last:
            rec_t.append(times[k + 1])
            rec_y.append(y.copy())
    return np.array(rec_t), np.array(rec_y)


def run_scenario(cfg: ScenarioConfig) -> SimResult:
    """Integrate a scenario from ``t = 0`` to the horizon and detect settling.

    Raises:
        NumericalAbort: with the partial :class:`Trajectory` attached.
    """
    import time

    sim = cfg.sim
    n = cfg.matrices.n
    times = time_grid(sim.horizon, sim.dt, cfg.breakpoints)
    monitor = _SettlingMonitor(n, sim.eps_settle)
    start = time.perf_counter()
    try:
        rec_t, rec_y = integrate(make_rhs(cfg), initial_state(cfg), times, sim.integrator, sim.record_stride, monitor)
    except NumericalAbort as exc:
        t_part, y_part = exc.trajectory
        exc.trajectory = Trajectory(t_part, y_part, n, cfg.controller)
        raise
    traj = Trajectory(rec_t, rec_y, n, cfg.controller)
    return SimResult(traj, monitor.report(sim.horizon), len(times) - 1, time.perf_counter() - start)


# --- diagnostics -------------------------------------------------------------


def lyapunov_v(channel, topo: ConnectionMatrices) -> np.ndarray:
    """``V(z) = sqrt(lambda_min z^T M z) / N`` per sample for a (samples x N) channel."""
    z = np.atleast_2d(np.asarray(channel, dtype=float))
    quad = np.einsum("ki,ij,kj->k", z, topo.leader_matrix, z)
    return np.sqrt(topo.lambda_min * np.maximum(quad, 0.0)) / topo.n


def simulate_observer_error_coordinates(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the autonomous observer directly in error coordinates.

    Uses the same grid and integrator as :func:`run_scenario`; returns the
    recorded times and a (samples x 2N) array ``[x_tilde, v_tilde]``.
    """
    topo = cfg.matrices
    n = topo.n
    sign = cfg.sim.sign_function()
    u0 = cfg.leader.u0

    def rhs(t, z, left=False):
        dx, dv = error_coordinates_rhs(z[:n], z[n:], u0(t), cfg.observer, topo, sign)
        return np.concatenate((dx, dv))

    ic = cfg.initial
    z0 = np.concatenate((np.asarray(ic.xhat) - cfg.leader.x0_init, np.asarray(ic.vhat) - cfg.leader.v0_init))
    times = time_grid(cfg.sim.horizon, cfg.sim.dt, cfg.breakpoints)
    return integrate(rhs, z0, times, cfg.sim.integrator, cfg.sim.record_stride)


def simulate_scalar_fixed_time(
    params: FixedTimeParams,
    x0: float,
    tol: float = 1e-6,
    dt_near: float = 1e-6,
    dt_max: float = 1e-2,
    rel_step: float = 1e-2,
    t_max: float = 1e4,
) -> float:
    """Time for ``dx/dt = -(alpha|x|^p + beta|x|^q)^k sign(x)`` to reach ``|x| < tol``.

    RK4 with step ``rel_step |x| / |f(x)|`` capped at ``dt_max``. For ``|x| < 1``
    the step is never finer than ``dt_near``, the resolution at which the
    crossing of the origin is located; a sign change of ``x`` within a step
    counts as reaching it.
    """
    a, b, p, q, k = params.as_tuple()

    def f(x):
        ax = abs(x)
        return -((a * ax**p + b * ax**q) ** k) * (1.0 if x > 0 else -1.0 if x < 0 else 0.0)

    t, x = 0.0, float(x0)
    while abs(x) >= tol:
        if t > t_max:
            raise RuntimeError(f"no settling before t_max={t_max}")
        fx = f(x)
        h = min(rel_step * abs(x) / abs(fx), dt_max)
        if abs(x) < 1:
            h = max(h, dt_near)
        k1 = fx
        k2 = f(x + h / 2 * k1)
        k3 = f(x + h / 2 * k2)
        k4 = f(x + h * k3)
        x_new = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        if x_new * x <= 0:
            return t
        x = x_new
    return t
