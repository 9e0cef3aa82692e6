"""Scenario configuration: TOML schema, validation and (de)serialization.

A scenario file has the sections ``[topology]``, ``[leader]``,
``[disturbance]``, ``[agents]``, ``[observer]``, ``[controller]``, ``[sim]``
and, for the time-varying protocol, ``[nonautonomous]``. The grammar is
documented in the README. Gains may be given as ``"auto"`` to take the
smallest values satisfying the settling-time conditions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .fixed_time_math import ExponentConstraintError, FixedTimeParams
from .graph_topology import ConnectionMatrices, TopologyError, TopologySpec, build_matrices
from .protocols import (
    ControllerParams,
    DisturbanceModel,
    LeaderModel,
    NonAutoParams,
    ObserverParams,
    Signal,
    minimal_observer_gains,
    validate_controller_gains,
    validate_observer_gains,
)
from .sim_engine import SimConfig

BUNDLED = ("reference_autonomous", "reference_nonautonomous", "reference_autonomous_literal")


class ConfigError(ValueError):
    """Invalid scenario file; the message names the section and key."""


class GainWarning(UserWarning):
    """Gains violate a settling-time condition; the run is allowed."""


@dataclass(frozen=True)
class InitialConditions:
    x: tuple[float, ...]
    v: tuple[float, ...]
    xhat: tuple[float, ...]
    vhat: tuple[float, ...]

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, tuple(float(val) for val in getattr(self, f.name)))
        lengths = {len(getattr(self, f.name)) for f in fields(self)}
        if len(lengths) != 1:
            raise ConfigError("[agents]: x, v, xhat, vhat must all have one entry per agent")

    @property
    def n(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class NonAutoSpec:
    """Shape of the three gain windows: exponential rates, ``T`` parameters and ``t0``."""

    rates: tuple[float, float, float]
    shapes: tuple[float, float, float]
    t0: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    topology: TopologySpec
    leader: LeaderModel
    disturbance: DisturbanceModel
    initial: InitialConditions
    observer: ObserverParams
    controller: ControllerParams
    sim: SimConfig = field(default_factory=SimConfig)
    nonauto: NonAutoSpec | None = None

    @cached_property
    def matrices(self) -> ConnectionMatrices:
        return build_matrices(self.topology)

    @property
    def protocol(self) -> str:
        return "autonomous" if self.nonauto is None else "nonautonomous"

    @cached_property
    def nonauto_params(self) -> NonAutoParams | None:
        if self.nonauto is None:
            return None
        return NonAutoParams.build(self.observer, self.controller, self.nonauto.rates, self.nonauto.shapes, self.nonauto.t0)

    @property
    def controller_activation_time(self) -> float:
        """``T'_o``: when the tracking controller switches on."""
        if self.nonauto_params is not None:
            return self.nonauto_params.T_o_prime
        return 0.0 if self.controller.start == "immediate" else self.observer.T_o

    @property
    def breakpoints(self) -> tuple[float, ...]:
        pts = {self.controller_activation_time}
        if self.nonauto_params is not None:
            pts |= set(self.nonauto_params.breakpoints)
        return tuple(sorted(pts))

    @property
    def ubst(self) -> dict:
        """Settling-time upper bounds recomputed from the parameters.

        Keys: ``v_tilde`` (velocity estimate), ``x_tilde`` (full observer) and
        ``tracking``.
        """
        if self.nonauto_params is not None:
            na = self.nonauto_params
            return {"v_tilde": na.T_velocity, "x_tilde": na.T_o, "tracking": na.T_hat}
        c = self.controller
        return {
            "v_tilde": self.observer.T_c1,
            "x_tilde": self.observer.T_o,
            "tracking": self.controller_activation_time + c.That_c1 + c.That_c2,
        }

    def observer_report(self):
        return validate_observer_gains(self.observer, self.matrices, self.leader)

    def controller_report(self):
        return validate_controller_gains(self.controller, self.leader, self.disturbance, self.controller_activation_time)

    def with_sim(self, **changes) -> ScenarioConfig:
        return replace(self, sim=replace(self.sim, **changes))


# --- parsing -----------------------------------------------------------------


def _get(section: dict, sec_name: str, key: str, default=...):
    if key in section:
        return section[key]
    if default is ...:
        raise ConfigError(f"[{sec_name}]: missing key {key!r}")
    return default


def _float(section, sec_name, key, default=...):
    value = _get(section, sec_name, key, default)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"[{sec_name}]: {key!r} must be a number, got {value!r}") from None


def _vector(value, n: int, sec_name: str, key: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) * n
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"[{sec_name}]: {key!r} must be a number or a list of numbers") from None
    if len(out) != n:
        raise ConfigError(f"[{sec_name}]: {key!r} has {len(out)} entries, expected {n}")
    return out


def _signal(section: dict, sec_name: str, key: str = "u0") -> Signal:
    raw = _get(section, sec_name, key)
    if not isinstance(raw, dict):
        raise ConfigError(f"[{sec_name}]: {key!r} must be a table with kind/amplitude/freq/phase")
    try:
        return Signal(
            kind=str(raw.get("kind", "constant")),
            amplitude=float(raw.get("amplitude", 0.0)),
            freq=float(raw.get("freq", 0.0)),
            phase=float(raw.get("phase", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"[{sec_name}]: {key}: {exc}") from None


def _smallest_cover(target: float, gain: float) -> float:
    """Smallest float ``z`` near ``target / gain`` with ``gain * z >= target`` in floating point."""
    z = target / gain
    while gain * z < target:
        z = np.nextafter(z, np.inf)
    return float(z)


def _section(data: dict, name: str, required: bool = True) -> dict:
    if name not in data:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return {}
    if not isinstance(data[name], dict):
        raise ConfigError(f"[{name}] must be a table")
    return data[name]


def scenario_from_dict(data: dict, name: str = "scenario", strict: bool = False) -> ScenarioConfig:
    """Validate a parsed scenario mapping and resolve ``"auto"`` gains.

    Raises:
        ConfigError: parse or consistency problems, naming the section and key.
            With ``strict=True`` gain-condition violations are errors too;
            otherwise they emit :class:`GainWarning`.
    """
    known = {"name", "topology", "leader", "disturbance", "agents", "observer", "controller", "sim", "nonautonomous"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    name = str(data.get("name", name))

    top = _section(data, "topology")
    n = int(_get(top, "topology", "n_followers"))
    edges = _get(top, "topology", "edges", [])
    try:
        edge_list = tuple((int(e[0]), int(e[1]), float(e[2]) if len(e) > 2 else 1.0) for e in edges)
    except (TypeError, ValueError, IndexError):
        raise ConfigError("[topology]: 'edges' must be a list of [i, j, weight] triples") from None
    topology = TopologySpec(n, edge_list, _vector(_get(top, "topology", "leader_links"), n, "topology", "leader_links"))
    try:
        matrices = build_matrices(topology)
    except TopologyError as exc:
        raise ConfigError(f"[topology]: {exc}") from None

    lead = _section(data, "leader")
    u0 = _signal(lead, "leader")
    try:
        leader = LeaderModel(u0, _float(lead, "leader", "u0_max", u0.bound), _float(lead, "leader", "x0"), _float(lead, "leader", "v0"))
    except ValueError as exc:
        raise ConfigError(f"[leader]: {exc}") from None

    dist = _section(data, "disturbance", required=False)
    if dist:
        base = _signal({"d": dist}, "disturbance", "d")
        step = _float(dist, "disturbance", "phase_step", 0.0)
        signals = tuple(replace(base, phase=base.phase + step * i) for i in range(1, n + 1))
        delta = _vector(_get(dist, "disturbance", "delta", base.bound), n, "disturbance", "delta")
        try:
            disturbance = DisturbanceModel(signals, delta)
        except ValueError as exc:
            raise ConfigError(f"[disturbance]: {exc}") from None
    else:
        disturbance = DisturbanceModel.zero(n)

    ag = _section(data, "agents")
    initial = InitialConditions(
        *(_vector(_get(ag, "agents", key), n, "agents", key) for key in ("x", "v", "xhat", "vhat"))
    )

    ob = _section(data, "observer")
    try:
        core = FixedTimeParams(*(_float(ob, "observer", key) for key in ("alpha", "beta", "p", "q", "k")))
    except ExponentConstraintError as exc:
        raise ConfigError(f"[observer]: {exc}") from None
    T_c1, T_c2 = _float(ob, "observer", "T_c1"), _float(ob, "observer", "T_c2")
    if not (T_c1 > 0 and T_c2 > 0):
        raise ConfigError("[observer]: T_c1 and T_c2 must be positive")
    kx_min, kv_min = minimal_observer_gains(core, matrices, T_c1, T_c2)
    kx = _get(ob, "observer", "kappa_x", "auto")
    kv = _get(ob, "observer", "kappa_v", "auto")
    kappa_x = _vector(kx_min if kx == "auto" else kx, n, "observer", "kappa_x")
    kappa_v = _vector(kv_min if kv == "auto" else kv, n, "observer", "kappa_v")
    zv = _get(ob, "observer", "zeta_v", "auto")
    zeta_v = _smallest_cover(leader.u0_max, min(kappa_v)) if zv == "auto" else _float(ob, "observer", "zeta_v")
    try:
        observer = ObserverParams(core, _float(ob, "observer", "zeta_x", 0.0), zeta_v, kappa_x, kappa_v, T_c1, T_c2)
    except ValueError as exc:
        raise ConfigError(f"[observer]: {exc}") from None

    ct = _section(data, "controller")
    z = _get(ct, "controller", "zeta", "auto")
    zeta = tuple(leader.u0_max + d for d in disturbance.delta) if z == "auto" else _vector(z, n, "controller", "zeta")
    try:
        controller = ControllerParams(
            *(_float(ct, "controller", key) for key in ("alpha1", "beta1", "alpha2", "beta2", "p", "q", "k", "That_c1", "That_c2")),
            zeta=zeta,
            start=str(_get(ct, "controller", "start", "immediate")),
        )
    except (ExponentConstraintError, ValueError) as exc:
        raise ConfigError(f"[controller]: {exc}") from None

    na_sec = _section(data, "nonautonomous", required=False)
    nonauto = None
    if na_sec:
        rates = _vector(_get(na_sec, "nonautonomous", "rates"), 3, "nonautonomous", "rates")
        shapes = _vector(_get(na_sec, "nonautonomous", "shapes"), 3, "nonautonomous", "shapes")
        nonauto = NonAutoSpec(rates, shapes, _float(na_sec, "nonautonomous", "t0", 0.0))

    sim_sec = _section(data, "sim", required=False)
    try:
        sim = SimConfig(
            dt=_float(sim_sec, "sim", "dt", 1e-5),
            horizon=_float(sim_sec, "sim", "horizon", 3.0),
            integrator=str(sim_sec.get("integrator", "rk4")).lower(),
            sign_mode=str(sim_sec.get("sign_mode", "exact")),
            boundary_width=_float(sim_sec, "sim", "boundary_width", 1e-9),
            record_stride=int(sim_sec.get("record_stride", 1)),
            eps_settle=_float(sim_sec, "sim", "eps_settle", 1e-3),
        )
    except ValueError as exc:
        raise ConfigError(f"[sim]: {exc}") from None

    try:
        cfg = ScenarioConfig(name, topology, leader, disturbance, initial, observer, controller, sim, nonauto)
        na = cfg.nonauto_params
    except ValueError as exc:
        raise ConfigError(f"[nonautonomous]: {exc}") from None
    bounds = cfg.ubst
    if sim.horizon <= max(bounds.values()):
        raise ConfigError(f"[sim]: horizon={sim.horizon} must exceed every settling bound {bounds}")
    if na is not None and not (na.rho1.window_end <= na.rho2.t0 and (na.T_o_prime != na.T_o or na.rho2.window_end <= na.rho3.t0)):
        raise ConfigError("[nonautonomous]: gain windows are not ordered")

    problems = cfg.observer_report().violations + cfg.controller_report().violations
    if problems:
        msg = f"{name}: gains violate settling conditions: {problems}"
        if strict:
            raise ConfigError(msg)
        warnings.warn(msg, GainWarning, stacklevel=2)
    return cfg


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Plain mapping with fully resolved (numeric) gains; inverse of :func:`scenario_from_dict`."""
    n = cfg.topology.n_followers

    def sig(s: Signal) -> dict:
        return {"kind": s.kind, "amplitude": s.amplitude, "freq": s.freq, "phase": s.phase}

    signals = cfg.disturbance.signals
    base = signals[0]
    step = (signals[1].phase - base.phase) if n > 1 else 0.0
    base0 = replace(base, phase=base.phase - step)
    uniform = all(replace(s, phase=base0.phase + step * i) == s for i, s in enumerate(signals, start=1))
    if not uniform:
        raise ValueError("disturbance signals are not expressible as one template with a phase step")
    c, o = cfg.controller, cfg.observer
    data = {
        "name": cfg.name,
        "topology": {
            "n_followers": n,
            "edges": [[i, j, w] for i, j, w in cfg.topology.edges],
            "leader_links": list(cfg.topology.leader_links),
        },
        "leader": {"u0": sig(cfg.leader.u0), "u0_max": cfg.leader.u0_max, "x0": cfg.leader.x0_init, "v0": cfg.leader.v0_init},
        "disturbance": {**sig(base0), "phase_step": step, "delta": list(cfg.disturbance.delta)},
        "agents": {k: list(getattr(cfg.initial, k)) for k in ("x", "v", "xhat", "vhat")},
        "observer": {
            "alpha": o.core.alpha, "beta": o.core.beta, "p": o.core.p, "q": o.core.q, "k": o.core.k,
            "zeta_x": o.zeta_x, "zeta_v": o.zeta_v,
            "kappa_x": o.kappa_x.tolist(), "kappa_v": o.kappa_v.tolist(),
            "T_c1": o.T_c1, "T_c2": o.T_c2,
        },
        "controller": {
            "alpha1": c.alpha1, "beta1": c.beta1, "alpha2": c.alpha2, "beta2": c.beta2,
            "p": c.p, "q": c.q, "k": c.k, "That_c1": c.That_c1, "That_c2": c.That_c2,
            "zeta": c.zeta.tolist(), "start": c.start,
        },
        "sim": {
            "dt": cfg.sim.dt, "horizon": cfg.sim.horizon, "integrator": cfg.sim.integrator,
            "sign_mode": cfg.sim.sign_mode, "boundary_width": cfg.sim.boundary_width,
            "record_stride": cfg.sim.record_stride, "eps_settle": cfg.sim.eps_settle,
        },
    }
    if cfg.nonauto is not None:
        data["nonautonomous"] = {"rates": list(cfg.nonauto.rates), "shapes": list(cfg.nonauto.shapes), "t0": cfg.nonauto.t0}
    return data


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled scenario {name!r}; available: {BUNDLED}")
    return Path(str(resources.files("ftconsensus") / "data" / f"{name}.toml"))


def load_scenario(path, strict: bool = False) -> ScenarioConfig:
    """Load a scenario file, or a bundled scenario by name (e.g. ``"reference_autonomous"``)."""
    path = bundled_path(path) if str(path) in BUNDLED else Path(path)
    try:
        data = tomli.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None
    return scenario_from_dict(data, name=path.stem, strict=strict)


def save_scenario(cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(tomli_w.dumps(scenario_to_dict(cfg)))
    return path


def set_parameter(data: dict, key: str, value) -> dict:
    """Return a copy of a scenario mapping with ``section.key`` replaced."""
    try:
        section, item = key.split(".", 1)
    except ValueError:
        raise ConfigError(f"parameter must be given as section.key, got {key!r}") from None
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    out.setdefault(section, {})[item] = value
    return out


def shared_scenario_mismatches(a: ScenarioConfig, b: ScenarioConfig) -> list[str]:
    """Fields that must agree between two protocol variants of one scenario.

    Returns dotted names such as ``"leader.x0_init"``; empty when the two
    configs describe the same scenario.
    """
    diffs = []
    for section in ("topology", "leader", "disturbance", "initial"):
        sa, sb = getattr(a, section), getattr(b, section)
        for f in fields(sa):
            if not f.compare:
                continue
            va, vb = getattr(sa, f.name), getattr(sb, f.name)
            if not _same(va, vb):
                diffs.append(f"{section}.{f.name}")
    return diffs


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(a, b)
    return a == b
