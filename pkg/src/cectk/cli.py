"""Command-line front end: solve, simulate, sweep, diagnose.

Outputs are deterministic for a fixed argument vector and seed (JSON with
sorted keys, full-precision floats), so runs can be diffed byte for byte.
The CECTK_OUTPUT_DIR environment variable redirects relative --output
paths.  Exit codes: 0 success, 1 runtime failure, 2 bad arguments.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .diagnostics import check_projection_degeneracy, diagnose_regularity, sweep_sigma, sweep_theta
from .models import available_models, instance_factory, load_config, make_instance
from .policies import POLICY_NAMES, make_policy
from .relaxation import DEFAULT_TOL, solve_nominal
from .simulator import evaluate
from .solver import SolverConfig, SolverError

OUTPUT_DIR_ENV = "CECTK_OUTPUT_DIR"


class CliError(Exception):
    """Bad arguments or configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    model: str = "diamond"
    config: dict = None
    policy: str = None
    sigma: float = None
    theta: float = None
    reps: int = 400
    seed: int = 0
    T: int = None
    tol: float = None
    grid: list = None
    threads: int = 1
    output: str = None
    format: str = "json"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError("not JSON serializable: %r" % type(obj))


def _dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _parse_grid(text):
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise CliError("--grid expects comma-separated numbers, got %r" % text)
    if not vals:
        raise CliError("--grid is empty")
    return vals


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="diamond",
                        help="registered model name or 'custom-json' (default: diamond)")
    common.add_argument("--config", default=None, metavar="FILE",
                        help="JSON file with base model and parameter overrides")
    common.add_argument("--T", type=int, default=None, help="horizon override")
    common.add_argument("--sigma", type=float, default=None, help="noise scale override")
    common.add_argument("--seed", type=int, default=0, help="root seed (default: 0)")
    common.add_argument("--tol", type=float, default=None,
                        help="solver KKT tolerance (default: command-specific)")
    common.add_argument("--threads", type=int, default=0,
                        help="worker cap for replications; 0 = available parallelism")
    common.add_argument("--output", default=None, metavar="PATH",
                        help="also write the report to PATH (relative paths honor "
                             "$" + OUTPUT_DIR_ENV + ")")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="output format (csv applies to sweeps)")

    parser = argparse.ArgumentParser(
        prog="cectk",
        description="Certainty-equivalent control policies for constrained "
                    "stochastic programs: relaxation solves, policy simulation, "
                    "sweeps, and regularity diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("solve", parents=[common],
                   help="solve the nominal relaxation and print the plan")

    sim = sub.add_parser("simulate", parents=[common],
                         help="Monte Carlo evaluation of one policy")
    sim.add_argument("--policy", required=True, choices=POLICY_NAMES)
    sim.add_argument("--theta", type=float, default=None,
                     help="hybrid threshold (default: 1.5)")
    sim.add_argument("--reps", type=int, default=400, help="replications (default: 400)")

    ssig = sub.add_parser("sweep-sigma", parents=[common],
                          help="gap versus noise scale for one policy")
    ssig.add_argument("--policy", required=True, choices=POLICY_NAMES)
    ssig.add_argument("--theta", type=float, default=None)
    ssig.add_argument("--grid", required=True, help="comma-separated sigma values")
    ssig.add_argument("--reps", type=int, default=400)

    sth = sub.add_parser("sweep-theta", parents=[common],
                         help="hybrid gap and re-solve count versus threshold")
    sth.add_argument("--grid", required=True, help="comma-separated theta values")
    sth.add_argument("--reps", type=int, default=400)

    sub.add_parser("diagnose", parents=[common],
                   help="active sets, constraint qualification, degeneracy")
    return parser


def _run_config(ns):
    cfg = RunConfig(command=ns.command, model=ns.model, sigma=ns.sigma,
                    seed=ns.seed, T=ns.T, tol=ns.tol, threads=ns.threads,
                    output=ns.output, format=ns.format)
    if ns.config is not None:
        try:
            cfg.config = load_config(ns.config)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise CliError("bad --config: %s" % exc)
    cfg.policy = getattr(ns, "policy", None)
    cfg.theta = getattr(ns, "theta", None)
    if hasattr(ns, "reps"):
        cfg.reps = ns.reps
        if cfg.reps < 1:
            raise CliError("--reps must be at least 1")
    if hasattr(ns, "grid"):
        cfg.grid = _parse_grid(ns.grid)
    if cfg.sigma is not None and cfg.sigma < 0:
        raise CliError("--sigma must be nonnegative")
    if cfg.theta is not None and cfg.theta < 0:
        raise CliError("--theta must be nonnegative")
    if cfg.threads < 0:
        raise CliError("--threads must be nonnegative")
    if cfg.threads == 0:
        cfg.threads = os.cpu_count() or 1
    if cfg.tol is not None and cfg.tol <= 0:
        raise CliError("--tol must be positive")
    return cfg


def _solver_config(cfg, default_tol):
    return SolverConfig(tol_kkt=cfg.tol if cfg.tol is not None else default_tol)


def _instance(cfg):
    try:
        return make_instance(cfg.model, config=cfg.config, sigma=cfg.sigma, T=cfg.T)
    except (KeyError, ValueError) as exc:
        raise CliError(str(exc))


def _policy(cfg):
    theta = cfg.theta
    if cfg.policy == "hybrid" and theta is None:
        theta = 1.5
    try:
        return make_policy(cfg.policy, theta=theta)
    except ValueError as exc:
        raise CliError(str(exc))


def _emit(cfg, text):
    sys.stdout.write(text)
    if cfg.output:
        path = cfg.output
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not os.path.isabs(path):
            path = os.path.join(base, path)
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_solve(cfg):
    instance = _instance(cfg)
    plan = solve_nominal(instance, _solver_config(cfg, DEFAULT_TOL))
    out = {"command": "solve", "model": cfg.model, "value": plan.value,
           "plan": plan.to_dict()}
    _emit(cfg, _dump_json(out))


def _cmd_simulate(cfg):
    instance = _instance(cfg)
    policy = _policy(cfg)
    report = evaluate(instance, policy, cfg.reps,
                      config=_solver_config(cfg, DEFAULT_TOL),
                      seed=cfg.seed, n_jobs=cfg.threads)
    _emit(cfg, _dump_json({"command": "simulate", "report": report.to_dict()}))


def _table_text(cfg, table, meta):
    if cfg.format == "csv":
        return table.to_csv()
    return _dump_json({"command": cfg.command, "rows": table.rows, **meta})


def _cmd_sweep_sigma(cfg):
    for s in cfg.grid:
        if s < 0:
            raise CliError("sigma grid values must be nonnegative")
    factory = instance_factory(cfg.model, config=cfg.config, T=cfg.T)
    try:
        factory(cfg.grid[0])
    except (KeyError, ValueError) as exc:
        raise CliError(str(exc))
    table = sweep_sigma(factory, cfg.grid, _policy(cfg), cfg.reps, cfg.seed,
                        config=_solver_config(cfg, DEFAULT_TOL),
                        n_jobs=cfg.threads)
    _emit(cfg, _table_text(cfg, table, {"policy": cfg.policy, "reps": cfg.reps,
                                        "seed": cfg.seed}))


def _cmd_sweep_theta(cfg):
    for th in cfg.grid:
        if th < 0:
            raise CliError("theta grid values must be nonnegative")
    instance = _instance(cfg)
    table = sweep_theta(instance, cfg.grid, M=cfg.reps, seed=cfg.seed,
                        config=_solver_config(cfg, DEFAULT_TOL),
                        n_jobs=cfg.threads)
    _emit(cfg, _table_text(cfg, table, {"reps": cfg.reps, "seed": cfg.seed}))


def _cmd_diagnose(cfg):
    instance = _instance(cfg)
    scfg = _solver_config(cfg, DEFAULT_TOL)
    report = diagnose_regularity(instance, scfg)
    plan = solve_nominal(instance, scfg)
    verdict = check_projection_degeneracy(
        instance, 1, instance.x1, instance.exo.mean, plan.control(1), scfg)
    out = {"command": "diagnose", "regularity": report.to_dict(),
           "projection_degeneracy_t1": verdict.to_dict()}
    _emit(cfg, _dump_json(out))


_COMMANDS = {
    "solve": _cmd_solve,
    "simulate": _cmd_simulate,
    "sweep-sigma": _cmd_sweep_sigma,
    "sweep-theta": _cmd_sweep_theta,
    "diagnose": _cmd_diagnose,
}


def run(argv=None):
    """Parse argv and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = _run_config(ns)
    except CliError as exc:
        sys.stderr.write("cectk %s: error: %s\n" % (ns.command, exc))
        sys.stderr.write("run 'cectk %s --help' for usage\n" % ns.command)
        return 2
    try:
        _COMMANDS[cfg.command](cfg)
    except CliError as exc:
        sys.stderr.write("cectk %s: error: %s\n" % (cfg.command, exc))
        return 2
    except SolverError as exc:
        sys.stderr.write("cectk %s: solver failure: %s\n" % (cfg.command, exc))
        return 1
    except (ValueError, OSError) as exc:
        sys.stderr.write("cectk %s: error: %s\n" % (cfg.command, exc))
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
