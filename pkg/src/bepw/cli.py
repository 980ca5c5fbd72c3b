"""Command-line entry point.

Subcommands: ``profile`` (construct and export the diffusion profile),
``run1d``/``runmd`` (time integration from a JSON config), ``green``
(kernel norm tables), ``rates`` (fit a recorded norm series), and
``experiment`` (canned verification runs).  Exit codes: 0 success,
1 runtime error, 2 acceptance failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .config import load_config
from .core import BepwError, PressureLaw
from .greenfn import kernel_norm_table, kernel_table_to_csv
from .hydro import Trajectory, run
from .profile import profile_to_csv, solve_profile


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bepw",
        description="planar diffusion waves of the two-species Euler-Poisson system",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="solve the diffusion profile and export CSV")
    p.add_argument("--rho-minus", type=float, required=True)
    p.add_argument("--rho-plus", type=float, required=True)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--L-zeta", type=float, default=20.0)
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--out", required=True)

    for name in ("run1d", "runmd"):
        p = sub.add_parser(name, help=f"time integration ({name[3:]}) from a JSON config")
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None, help="output directory for series/snapshots")

    p = sub.add_parser("green", help="kernel norm table")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--dim", type=int, choices=(1, 2), required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rates", help="fit a decay exponent from a norm series CSV")
    p.add_argument("--series", required=True)
    p.add_argument("--quantity", required=True, help="Vp, Vm, Up, Um, K or gradphi")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", required=True, help="2, inf, ...")
    p.add_argument("--alpha", type=int, default=0)
    p.add_argument("--window", type=float, nargs=2, default=None)

    p = sub.add_parser("experiment", help="run a canned verification experiment")
    p.add_argument("--name", required=True, choices=sorted(harness.CANNED))
    p.add_argument("--config", default=None, help="JSON overrides for the canned setup")
    p.add_argument("--out", default=None)
    return parser


def _cmd_profile(args) -> int:
    law = PressureLaw(kappa=args.kappa, gamma=args.gamma)
    prof = solve_profile(law, args.rho_minus, args.rho_plus, args.L_zeta, args.points)
    profile_to_csv(prof, args.out)
    print(f"profile with end states ({prof.rho_minus}, {prof.rho_plus}) -> {args.out}")
    return 0


def _cmd_run(args, dims_expected) -> int:
    cfg = load_config(args.config)
    profile, grid, state0, shift, config, window, max_steps = harness.build_problem(cfg)
    if dims_expected == 1 and grid.dims != 1:
        raise BepwError("run1d expects a one-dimensional grid in the config")
    if dims_expected > 1 and grid.dims == 1:
        raise BepwError("runmd expects a multi-dimensional grid in the config")
    out = Path(args.out) if args.out else Path("bepw_out") / "run"
    out.mkdir(parents=True, exist_ok=True)
    config.out_dir = str(out)
    traj = run(state0, config, profile, shift, max_steps=max_steps)
    series = out / "norms.csv"
    traj.to_csv(series)
    print(f"advanced {traj.metadata['steps']} steps to t={traj.times[-1]:.6g}")
    print(f"norm series -> {series}")
    return 0


def _cmd_green(args) -> int:
    rows = kernel_norm_table(args.mu, args.eps, args.dim)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"green_norms_{args.dim}d.csv"
    kernel_table_to_csv(rows, path)
    print(f"kernel norm table -> {path}")
    return 0


def _cmd_rates(args) -> int:
    traj = Trajectory.from_csv(args.series)
    p = np.inf if args.p == "inf" else float(args.p)
    series = traj.get(args.quantity, p, args.alpha)
    window = tuple(args.window) if args.window else None
    theory = None
    base = {"Vp": "V", "Vm": "V", "Up": "U", "Um": "U", "K": "K"}.get(args.quantity)
    if base in ("V", "U") and args.n == 1:
        base += "1d"
    if base is not None and not (base == "K" and p != 2.0):
        theory = harness.theory_exponent(base, args.n, p, args.alpha)
    fit = harness.fit_exponent(traj.times, series, window, theory=theory)
    print(
        f"{args.quantity} p={args.p} alpha={args.alpha}: fitted {fit.fitted_exponent:.4f} "
        f"(r^2 {fit.r_squared:.5f}, stderr {fit.std_error:.2g})"
        + (f", theory {theory:.4f}" if theory is not None else "")
    )
    return 0


def _cmd_experiment(args) -> int:
    overrides = load_config(args.config) if args.config else None
    report = harness.experiment(args.name, overrides, out_dir=args.out)
    print(report.summary())
    return 0 if report.passed else 2


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "profile":
            return _cmd_profile(args)
        if args.command == "run1d":
            return _cmd_run(args, 1)
        if args.command == "runmd":
            return _cmd_run(args, 2)
        if args.command == "green":
            return _cmd_green(args)
        if args.command == "rates":
            return _cmd_rates(args)
        if args.command == "experiment":
            return _cmd_experiment(args)
        raise BepwError(f"unhandled command {args.command!r}")
    except BepwError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
