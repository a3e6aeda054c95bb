"""Command-line entry point.

Exit status: 0 success, 1 invalid configuration, 2 integration failure,
3 verification failures present.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..dynamics import IntegrationError, ModeState, integrate_mode, oracle_zero_inviscid
from ..symbols import Mode, PhysParams
from .config import ConfigError, ScenarioConfig, load_config
from .runner import run_scenario, sweep_nu
from .verify import SUITES, duhamel_comparison, verify_suite

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_VERIFY = 0, 1, 2, 3

ORACLE_CASES = ("electron-oscillator", "ion-oscillator", "conservation", "duhamel")


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_updates(seed=args.seed)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load(args)
    res = run_scenario(cfg, out_dir=args.out, threads=args.threads)
    for name, rep in res.energies.items():
        fit = rep.fit
        if fit is None:
            print(f"{name}: no tail fit (window too short or series not positive)")
        else:
            print(f"{name}: {fit.model} rate={fit.rate:.6g} prefactor={fit.prefactor:.6g} "
                  f"window=[{fit.window[0]:.6g}, {fit.window[1]:.6g}] "
                  f"residual={fit.residual:.3g}")
    print(f"wrote reports to {Path(args.out).resolve()}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    reports = verify_suite(cfg, args.suite, threads=args.threads)
    ok = True
    for rep in reports:
        for line in rep.lines():
            print(line)
        ok &= rep.passed
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_sweep(args) -> int:
    cfg = _load(args)
    try:
        nus = [float(v) for v in args.nu.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --nu list: {exc}") from exc
    for nu in nus:
        cfg.with_updates(nu=nu)  # validates each viscosity against the regime checks
    res = sweep_nu(cfg, nus, out_dir=args.out, threads=args.threads)
    print("nu,amplification,envelope_amplification,decay_rate")
    for r in res.rows:
        print(f"{r.nu:.6g},{r.amplification:.6g},{r.envelope_amplification:.6g},"
              f"{r.decay_rate:.6g}")
    print(f"log-log slope of amplification: {res.slope:.6g}")
    print(f"log-log slope of envelope amplification: {res.envelope_slope:.6g}")
    return EXIT_OK


def run_oracle(case: str) -> tuple[bool, list[str]]:
    """Compare the integrator with a closed form; returns (passed, report lines)."""
    lines = []
    if case in ("electron-oscillator", "ion-oscillator"):
        species = case.split("-")[0]
        p = PhysParams(delta=0 if species == "electron" else 1, nu=0.0, lam=0.0, mach=1.0)
        t = np.linspace(0.0, 50.0, 5001)
        tr = integrate_mode(ModeState(1.0, 0.0, 0.0), Mode(0, 1.0), p, 50.0, rtol=1e-11,
                            atol=1e-14, sample_times=t)
        exact = oracle_zero_inviscid(species, 1.0, 1.0, ModeState(1.0, 0.0, 0.0), t)
        err = float(np.max(np.abs(tr.Pi - exact[:, 0])))
        lines.append(f"{case}: max |eta - eta_exact| over [0, 50] = {err:.3e} (limit 1e-8)")
        return err <= 1e-8, lines
    if case == "conservation":
        p = PhysParams(delta=1, nu=0.0, lam=0.0, mach=1.0)
        t = np.linspace(0.0, 100.0, 1001)
        tr = integrate_mode(ModeState(1.0, 0.5, 0.25), Mode(1, 3.0), p, 100.0, rtol=1e-10,
                            atol=1e-14, sample_times=t)
        drift = float(np.max(np.abs(tr.F - tr.F[0])))
        lines.append(f"conservation: max |F(t) - F(0)| over [0, 100] = {drift:.3e} (limit 1e-8)")
        return drift <= 1e-8, lines
    if case == "duhamel":
        ok = True
        for delta in (0, 1):
            p = PhysParams(delta=delta, nu=1e-2, lam=0.0, mach=1.0)
            for xi in (0.0, 2.0, -2.0):
                _, rel = duhamel_comparison(p, 1.0, xi, 20.0, 1e-11, 1e-300)
                worst = float(np.max(rel))
                ok &= worst <= 1e-6
                lines.append(f"duhamel delta={delta} xi={xi:+g}: max relative gap {worst:.3e}")
        return ok, lines
    raise ConfigError(f"unknown oracle case {case!r}; expected one of {ORACLE_CASES}")


def cmd_oracle(args) -> int:
    ok, lines = run_oracle(args.case)
    for line in lines:
        print(line)
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    def flags(p, suppress):
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--out", default=d("out"), help="directory for CSV reports")
        p.add_argument("--seed", type=int, default=d(None), help="override the config seed")
        p.add_argument("--threads", type=int, default=d(1), help="worker threads for modes")

    # flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    flags(common, suppress=True)
    parser = argparse.ArgumentParser(prog="nspcouette",
                                     description="Sheared-frame mode simulator and checks")
    flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="run one scenario")
    p.add_argument("config")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("verify", parents=[common], help="run a property suite")
    p.add_argument("config")
    p.add_argument("--suite", default="all", choices=SUITES + ("all",))
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("sweep", parents=[common], help="viscosity sweep")
    p.add_argument("config")
    p.add_argument("--nu", required=True, help="comma-separated viscosities")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("oracle", parents=[common], help="compare against a closed form")
    p.add_argument("case", choices=ORACLE_CASES)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
