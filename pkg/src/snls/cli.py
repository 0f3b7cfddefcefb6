"""Command-line entry point.

Exit codes: 0 success, 1 an experiment verdict failed, 2 configuration
error, 3 numerical blow-up, 4 internal error.
"""

from __future__ import annotations

import argparse
import inspect
import os
import sys
from pathlib import Path


from .config import ConfigError, RunConfig, load_config
from .dynamics import BlowUpError, mass_drift, solve
from .experiments import EXPERIMENTS, run_ensemble
from .functionals import ensemble_moment, write_stats_csv, x_norms
from .io import write_norms_csv, write_trajectory_bin, write_trajectory_csv

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_INTERNAL = 4


def _settings(args) -> tuple[RunConfig, Path, str]:
    cfg = RunConfig() if args.config is None else load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        cfg = cfg.with_seed(args.seed)
    out = Path(args.out if args.out is not None else cfg.directory)
    fmt = args.format or cfg.formats
    return cfg, out, fmt


def _write_traj(traj, out: Path, stem: str, fmt: str) -> None:
    if fmt in ("csv", "both"):
        write_trajectory_csv(traj, out / f"{stem}.csv")
    if fmt in ("bin", "both"):
        write_trajectory_bin(traj, out / f"{stem}.bin")


def cmd_simulate(args) -> int:
    cfg, out, fmt = _settings(args)
    grid = cfg.grid()
    spec = cfg.spec()
    noise = cfg.noise_model(grid) if spec.noise_on else None
    traj = solve(cfg.initial_field(grid), spec, (cfg.t_start, cfg.t_end), cfg.dt,
                 noise=noise, stride=cfg.stride)
    out.mkdir(parents=True, exist_ok=True)
    _write_traj(traj, out, "trajectory", fmt)
    write_norms_csv(traj, out / "norms.csv")
    x1, x2 = x_norms(traj)
    print(f"relative mass drift: {float(mass_drift(traj).max()):.3e}")
    print(f"X1 = {x1:.10g}  X2 = {x2:.10g}")
    return EXIT_OK


def cmd_ensemble(args) -> int:
    cfg, out, fmt = _settings(args)
    grid = cfg.grid()
    spec = cfg.spec()
    noise = cfg.noise_model(grid) if spec.noise_on else None
    trajs = run_ensemble(cfg.initial_field(grid), spec, noise, (cfg.t_start, cfg.t_end), cfg.dt,
                         cfg.paths, seed=cfg.noise.seed, threads=args.threads, stride=cfg.stride)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for rho in cfg.rho:
        for q in ("x_norm", "x1", "x2"):
            st = ensemble_moment(trajs, rho, quantity=q, allow_single=True)
            rows.append((f"{q}_rho{rho:g}", st.window, st.estimate, st.std_error))
            print(f"{q:>6} rho={rho:g}: {st.estimate:.10g} +- {st.std_error:.3g}")
    write_stats_csv(out / "stats.csv", rows)
    if fmt in ("bin", "both"):
        for p, tr in enumerate(trajs):
            write_trajectory_bin(tr, out / f"path{p:05d}.bin")
    return EXIT_OK


def _experiment_kwargs(fn, cfg: RunConfig, threads: int) -> dict:
    params = inspect.signature(fn).parameters
    kwargs = {}
    for k, v in cfg.experiment.items():
        if k not in params:
            raise ConfigError(f"[experiment] key {k!r} not accepted; allowed: "
                              f"{', '.join(p for p in params if p not in ('grid', 'noise'))}")
        kwargs[k] = tuple(v) if isinstance(v, list) else v
    if "grid" in params and "grid" in cfg.sections:
        kwargs["grid"] = cfg.grid()
    if "noise" in params and "noise" in cfg.sections:
        kwargs["noise"] = cfg.noise_model()
    if "seed" in params and "seed" not in kwargs:
        kwargs["seed"] = cfg.noise.seed
    if "threads" in params:
        kwargs["threads"] = threads
    return kwargs


def cmd_experiment(args) -> int:
    if args.name not in EXPERIMENTS:
        print(f"unknown experiment {args.name!r}; valid names: {', '.join(EXPERIMENTS)}",
              file=sys.stderr)
        return EXIT_CONFIG
    cfg, out, _ = _settings(args)
    fn = EXPERIMENTS[args.name]
    kwargs = _experiment_kwargs(fn, cfg, args.threads)
    try:
        report = fn(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    report.write(out)
    print(report.to_text())
    return EXIT_OK if report.passed else EXIT_VERDICT


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, metavar="N",
                        help="worker threads; results do not depend on it")
    common.add_argument("--seed", type=int, metavar="U64", help="noise seed (overrides config)")
    common.add_argument("--format", choices=("csv", "bin", "both"),
                        help="trajectory output format (overrides config)")

    parser = argparse.ArgumentParser(prog="snls", description="Stochastic quintic NLS simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="run one path")
    sim.set_defaults(func=cmd_simulate)
    ens = sub.add_parser("ensemble", parents=[common], help="run independent paths, write moments")
    ens.set_defaults(func=cmd_ensemble)
    exp = sub.add_parser("experiment", parents=[common], help="run a named numerical study")
    exp.add_argument("name", help=f"one of: {', '.join(EXPERIMENTS)}")
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up at step {exc.step} (t = {exc.t:.6g}): {exc.reason}", file=sys.stderr)
        return EXIT_BLOWUP
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
