"""Command-line entry point: ``qfi-lab {steady,sweep,evolve,calibrate}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dynamics, sweep
from .config import ConfigError, load_config
from .model import (
    SYMMETRIC_STATES,
    InvalidDensityMatrix,
    ModelConfig,
    NotPositive,
    Scheme,
    prepare_initial,
    read_density,
    write_density,
)
from .qfi import qfi_report

EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_ALL_FAILED = 4
EXIT_NO_MATCH = 5
EXIT_AMBIGUOUS = 6

CONFIG_DIR_ENV = "QFI_LAB_CONFIG_DIR"


class UsageError(Exception):
    pass


def _g(x: float) -> str:
    return f"{x:.17g}"


def _model_args(p: argparse.ArgumentParser):
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="none")
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)


def _state_args(p: argparse.ArgumentParser):
    p.add_argument("--p44", type=float, default=0.0)
    p.add_argument("--p24-re", type=float, default=0.0)
    p.add_argument("--p24-im", type=float, default=0.0)
    p.add_argument("--symmetric-part", choices=sorted(SYMMETRIC_STATES), default="g",
                   help="symmetric-subspace state carrying the remaining weight")
    p.add_argument("--rho0", help="initial density matrix JSON (overrides --p44/--p24)")


def _model(args) -> ModelConfig:
    try:
        return ModelConfig(args.scheme, omega=args.omega, gamma=args.gamma, lam=args.lam,
                           mu=args.mu, delta=args.delta)
    except ValueError as exc:
        raise UsageError(f"model flags: {exc}") from exc


def _initial(args) -> np.ndarray:
    if args.rho0:
        try:
            return read_density(args.rho0)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"--rho0: {exc}") from exc
    try:
        return prepare_initial(args.p44, complex(args.p24_re, args.p24_im), args.symmetric_part)
    except NotPositive as exc:
        raise UsageError(f"--p44/--p24: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"--p44: {exc}") from exc


def cmd_steady(args) -> int:
    cfg = _model(args)
    rho0 = _initial(args)
    method = args.method or sweep.DEFAULT_METHOD[cfg.scheme]
    try:
        result = dynamics.solve_steady(cfg, rho0, method)
        rep = qfi_report(result.rho) if args.qfi else None
    except ValueError as exc:
        if method == "analytic":
            raise UsageError(f"--method: {exc}") from exc
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except RuntimeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.out:
        write_density(args.out, result.rho)
    if rep is not None:
        qfi_path = args.qfi_out or (Path(args.out).with_suffix(".qfi.json") if args.out else None)
        if qfi_path:
            Path(qfi_path).write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
        print(_g(rep.f_per_qubit))
    return 0


def cmd_sweep(args) -> int:
    try:
        rc = load_config(args.config)
    except ConfigError as exc:
        raise UsageError(f"config: {exc}") from exc
    out = args.out or rc.output
    if not out:
        raise UsageError("--out: no output path given")
    result = sweep.run_sweep(rc.spec, jobs=args.jobs)
    sweep.write_sweep_csv(result, out)
    best = result.max_point
    if best is None:
        print("error: every grid point failed", file=sys.stderr)
        return EXIT_ALL_FAILED
    a2 = "" if best["axis2"] is None else _g(best["axis2"])
    print(f"f_max={_g(best['f_per_qubit'])} at ({_g(best['axis1'])},{a2})")
    return 0


def cmd_evolve(args) -> int:
    cfg = _model(args)
    rho0 = _initial(args)
    if args.t_final < 0:
        raise UsageError("--t-final: must be non-negative")
    if args.dt <= 0:
        raise UsageError("--dt: must be positive")
    if args.sample_every < 1:
        raise UsageError("--sample-every: must be >= 1")
    try:
        times, states = dynamics.trajectory(dynamics.build_liouvillian(cfg), rho0, args.t_final,
                                            args.dt, sample_every=args.sample_every)
    except (dynamics.StepTooLarge, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    dynamics.write_trajectory_csv(args.out, times, states, basis=args.basis)
    return 0


def default_config_dir() -> Path:
    env = os.environ.get(CONFIG_DIR_ENV)
    return Path(env) if env else Path.home() / ".config" / "qfi_lab"


def cmd_calibrate(args) -> int:
    candidates = None
    if args.candidates:
        try:
            raw = json.loads(Path(args.candidates).read_text())
            candidates = [sweep.ConventionRecord.from_dict(c) for c in raw]
        except (OSError, ValueError, TypeError) as exc:
            raise UsageError(f"--candidates: {exc}") from exc
    try:
        rep = sweep.run_calibration(candidates)
    except sweep.NoMatch as exc:
        print(f"error: NoMatch: {exc}", file=sys.stderr)
        return EXIT_NO_MATCH
    except sweep.Ambiguous as exc:
        print(f"error: Ambiguous: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    rec = rep.record
    text = json.dumps(rec.to_dict(), indent=2) + "\n"
    cdir = Path(args.config_dir) if args.config_dir else default_config_dir()
    cdir.mkdir(parents=True, exist_ok=True)
    (cdir / "convention.json").write_text(text)
    err = sweep.nofeedback_error(rec)
    print(text, end="")
    print(f"max_error={_g(err)}")
    print(f"f2_axis_max={_g(rep.f2_maxima[rec.f2_axis]['f_per_qubit'])}")
    print(f"written={cdir / 'convention.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfi-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", help="steady state (and QFI) of one configuration")
    _model_args(p)
    _state_args(p)
    p.add_argument("--method", choices=dynamics.METHODS)
    p.add_argument("--out", help="density matrix JSON output")
    p.add_argument("--qfi", action="store_true", help="compute and print f_per_qubit")
    p.add_argument("--qfi-out", help="QFI report JSON (default: <out>.qfi.json)")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("sweep", help="parameter grid sweep to CSV")
    p.add_argument("config", help="RunConfig JSON path or preset name (fig1, fig2, fig3)")
    p.add_argument("--out", help="sweep CSV output")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("evolve", help="integrate the master equation to a trajectory CSV")
    _model_args(p)
    _state_args(p)
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--dt", type=float, default=dynamics.DEFAULT_DT)
    p.add_argument("--sample-every", type=int, default=1000)
    p.add_argument("--basis", choices=("product", "symmetric"), default="product")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("calibrate", help="pin the operator normalisation convention")
    p.add_argument("--candidates", help="JSON list of convention records")
    p.add_argument("--config-dir", help=f"output directory (default ${CONFIG_DIR_ENV} or ~/.config/qfi_lab)")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidDensityMatrix, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
