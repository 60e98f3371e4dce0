"""Command-line entry point: ``lgks-rcac {simulate,sweep,equilibrium,verify}``.

Exit codes: 0 success, 1 numerical divergence or failed verification,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import nullcontext
from dataclasses import replace
from typing import Optional, Sequence

from .config import ConfigError, RunConfig, load_config, scenario
from .harness import AllDivergedError, run_sweep, select_best, summarize, write_sweep_csv, write_trajectory_csv
from .lindblad import equilibrium_residual
from .metrics import bloch
from .sim import SimConfig, SimulationError, simulate

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

EQUILIBRIUM_TOL = 1e-3

log = logging.getLogger("lgks_rcac")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lgks-rcac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one closed-loop trajectory")
    p.add_argument("--config")
    p.add_argument("--scenario")
    p.add_argument("--out", help="trajectory CSV path ('-' for stdout)")
    p.add_argument("--open-loop-u", type=float, default=None, help="hold u at this value instead of the controller")

    p = sub.add_parser("sweep", help="grid search over (P0 scalar, beta)")
    p.add_argument("--config")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("equilibrium", help="LGKS residual of a scenario target at its equilibrium control")
    p.add_argument("--scenario", required=True)

    p = sub.add_parser("verify", help="run the invariant suites and the RCAC oracle check")
    p.add_argument("--fast", action="store_true", help="fewer random draws; 2 s oracle horizon")
    return parser


def _resolve(args) -> RunConfig:
    if not args.config and not args.scenario:
        raise ConfigError("give --config, --scenario, or both")
    preset = scenario(args.scenario) if args.scenario else None
    if args.config:
        cfg = load_config(args.config, preset)
    else:
        cfg = RunConfig(sim=SimConfig(rho_d=preset.rho_d))
    if cfg.sim is None:
        raise ConfigError("no target density: set target.rho_d or pass --scenario")
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _resolve(args)
    scfg = cfg.sim
    if args.open_loop_u is not None:
        scfg = replace(scfg, open_loop_u=args.open_loop_u)
    try:
        records = simulate(cfg.plant, cfg.rcac, scfg)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        with (nullcontext(sys.stdout) if args.out == "-" else open(args.out, "w", newline="")) as fh:
            write_trajectory_csv(records, fh)
    s = summarize(records, tuple(bloch(scfg.rho_d)))
    out = sys.stderr if args.out == "-" else sys.stdout
    print(
        f"t = {s['t_final']:g} s  e(0) = {s['e0']:.6g}  e(T) = {s['e_final']:.6g}  "
        f"entropy(T) = {s['entropy_final']:.6g}  bloch distance = {s['bloch_distance']:.6g}  "
        f"gains = ({s['gains_final'][0]:.6g}, {s['gains_final'][1]:.6g}, {s['gains_final'][2]:.6g})",
        file=out,
    )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _resolve(args)

    def progress(r):
        log.info("p0 = %g  beta = %g  J_h = %g", r.p0_scalar, r.beta, r.jh)

    try:
        results = run_sweep(cfg.plant, cfg.rcac, cfg.sim, cfg.sweep, workers=args.workers, progress=progress)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    with open(args.out, "w", newline="") as fh:
        write_sweep_csv(results, fh)
    try:
        p0, beta = select_best(results)
    except AllDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    jh = next(r.jh for r in results if r.p0_scalar == p0 and r.beta == beta)
    print(f"best: p0 = {p0:g}  beta = {beta:g}  J_h = {jh:.6g}")
    return EXIT_OK


def _cmd_equilibrium(args) -> int:
    preset = scenario(args.scenario)
    res = equilibrium_residual(RunConfig().plant, preset.rho_d, preset.equilibrium_u)
    print(f"{preset.name}: |rhs(rho_d, u = {preset.equilibrium_u:g})|_F = {res:.6e}")
    return EXIT_OK if res <= EQUILIBRIUM_TOL else EXIT_FAIL


def _cmd_verify(args) -> int:
    from .verify import run_all

    checks = run_all(fast=args.fast)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_OK if not failed else EXIT_FAIL


COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "equilibrium": _cmd_equilibrium,
    "verify": _cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
