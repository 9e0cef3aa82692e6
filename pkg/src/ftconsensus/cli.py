"""Command-line entry point: ``ftconsensus {run,gains,compare,sweep}``.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import tomli

from .analysis import REFERENCE_SLACKS, compare, run_with_report, sweep, tracking_bound_note
from .scenario import ConfigError, GainWarning, load_scenario
from .sim_engine import NumericalAbort

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _load(path: str, args) -> object:
    cfg = load_scenario(path, strict=args.strict)
    changes = {k: getattr(args, k) for k in ("dt", "horizon") if getattr(args, k, None) is not None}
    return cfg.with_sim(**changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _load(args.config, args)
    report, _ = run_with_report(cfg, args.out)
    print("\n".join(report.summary_lines()))
    if args.out:
        print(f"wrote trajectory and plot scripts to {args.out}")
    return EXIT_OK


def _aligned(rows: list[tuple[str, str]]) -> list[str]:
    width = max(len(k) for k, _ in rows)
    return [f"{k.ljust(width)}  {v}" for k, v in rows]


def gains_lines(cfg) -> list[str]:
    """Human-readable gain summary followed by ``key=value`` lines."""
    obs = cfg.observer_report()
    ctl = cfg.controller_report()
    rows = [
        ("N", str(obs.n_agents)),
        ("lambda_min(M)", f"{obs.lambda_min:.6g}"),
        ("gamma(rho)", f"{obs.gamma_rho:.10g}"),
        ("kappa_x (min over agents)", f"{obs.kappa_x:.6g}  required >= {obs.kappa_x_min:.6g}"),
        ("kappa_v (min over agents)", f"{obs.kappa_v:.6g}  required >= {obs.kappa_v_min:.6g}"),
        ("zeta_v", f"{obs.zeta_v:.6g}  required >= {obs.zeta_v_min:.6g}"),
        ("gamma1", f"{ctl.gamma1:.10g}"),
        ("gamma2", f"{ctl.gamma2:.10g}"),
        ("zeta_i (min)", f"{ctl.zeta.min():.6g}  required >= {ctl.zeta_min.max():.6g}"),
    ]
    for name, value in cfg.ubst.items():
        rows.append((f"UBST {name}", f"{value:.6g}"))
    violations = obs.violations + ctl.violations
    rows.append(("status", "compliant" if not violations else "VIOLATES: " + "; ".join(violations)))
    keyvals = {
        "lambda_min": obs.lambda_min,
        "gamma_rho": obs.gamma_rho,
        "kappa_x_min": obs.kappa_x_min,
        "kappa_v_min": obs.kappa_v_min,
        "zeta_v_min": obs.zeta_v_min,
        "gamma1": ctl.gamma1,
        "gamma2": ctl.gamma2,
        "compliant": not violations,
    }
    return _aligned(rows) + [""] + [f"{k}={v!r}" for k, v in keyvals.items()]


def cmd_gains(args) -> int:
    print("\n".join(gains_lines(_load(args.config, args))))
    return EXIT_OK


def cmd_compare(args) -> int:
    auto_cfg = _load(args.auto, args)
    nonauto_cfg = _load(args.nonauto, args)
    table, auto_report, nonauto_report = compare(auto_cfg, nonauto_cfg, workers=args.workers)
    for report in (auto_report, nonauto_report):
        print("\n".join(report.summary_lines()))
    print()
    print(table.to_text(REFERENCE_SLACKS if args.reference else None))
    note = tracking_bound_note(nonauto_report)
    if note and args.reference:
        print("note: " + note)
    return EXIT_OK


def parse_value(text: str):
    """Interpret a sweep value as a TOML literal, falling back to a bare string."""
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def cmd_sweep(args) -> int:
    cfg = _load(args.config, args)
    values = [parse_value(v) for v in args.values]
    results = sweep(cfg, args.param, values, workers=args.workers)
    header = f"{args.param:>20s}  {'T1':>11s}  {'T2':>11s}  {'T3':>11s}  gains"
    print(header)
    for value, report in results:
        times = [report.settling[c] for c in ("v_tilde", "x_tilde", "tracking")]
        cells = ["not settled" if t is None else f"{t:.5f}" for t in times]
        status = "ok" if not report.gain_violations else "violated"
        print(f"{str(value):>20s}  {cells[0]:>11s}  {cells[1]:>11s}  {cells[2]:>11s}  {status}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftconsensus", description="Fixed-time leader-follower consensus simulator")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--strict", action="store_true", help="treat gain-condition violations as errors")
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_overrides(p):
        p.add_argument("--dt", type=float, help="override the integration step")
        p.add_argument("--horizon", type=float, help="override the simulated horizon")

    p = sub.add_parser("run", parents=[common], help="simulate one scenario")
    p.add_argument("config", help="scenario TOML file or bundled scenario name")
    p.add_argument("--out", help="directory for the trajectory CSV and plot scripts")
    sim_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gains", parents=[common], help="check gain conditions and print minimal gains")
    p.add_argument("config")
    p.set_defaults(func=cmd_gains)

    p = sub.add_parser("compare", parents=[common], help="slack table for an autonomous/time-varying scenario pair")
    p.add_argument("auto")
    p.add_argument("nonauto")
    p.add_argument("--workers", type=int, help="parallel processes (default: up to the CPU count)")
    p.add_argument("--reference", action="store_true", help="also print the published slacks")
    sim_overrides(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[common], help="re-run a scenario over values of one parameter")
    p.add_argument("config")
    p.add_argument("--param", required=True, help="dotted key, e.g. observer.T_c1")
    p.add_argument("--values", nargs="+", required=True)
    p.add_argument("--workers", type=int)
    sim_overrides(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", GainWarning)
            warnings.showwarning = _show_warning
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
