"""Command-line interface.

Subcommands
-----------
gen    write scenario YAML files for a family and seed list
run    full benchmark (all families, seeds, methods) with report emission
eval   compute metrics for an existing trajectory or execution-trace file
solve  single CoMOTO solve for one scenario, optionally with iteration trace

Output directory precedence: ``--out`` flag, then the ``COMOTO_OUT_DIR``
environment variable, then ``./comoto_out``.  Exit codes: 0 on success,
1 on usage errors (bad flags, malformed inputs), 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .baselines import load_trace, nominal_trajectory
from .benchmark import (
    METHODS,
    load_config,
    prepare_scenario,
    run_benchmark,
    write_benchmark_outputs,
)
from .errors import ContractViolation
from .kinematics import load_trajectory, save_trajectory
from .metrics import evaluate_run
from .optimizer import OptimizerOptions, optimize
from .scenarios import FAMILIES, generate_scenarios, load_scenario, save_scenario

ENV_OUT_DIR = "COMOTO_OUT_DIR"


class UsageError(Exception):
    """Bad command line or malformed input file."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; remap to exit code 1.
    def error(self, message):
        raise UsageError(message)


def _out_dir(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get(ENV_OUT_DIR)
    if env:
        return Path(env)
    return Path("comoto_out")


def build_parser() -> _Parser:
    parser = _Parser(prog="comoto", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write scenario files")
    gen.add_argument("--family", choices=FAMILIES, required=True)
    gen.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    gen.add_argument("--out", default=None)
    gen.add_argument("--verbose", action="store_true")

    run = sub.add_parser("run", help="run the full benchmark")
    run.add_argument("--config", default=None)
    run.add_argument("--family", choices=FAMILIES, default=None, help="restrict to one family")
    run.add_argument("--seeds", type=int, nargs="+", default=None)
    run.add_argument("--out", default=None)
    run.add_argument(
        "--format",
        nargs="+",
        choices=["csv", "json", "markdown"],
        default=["csv", "json", "markdown"],
    )
    run.add_argument("--verbose", action="store_true")

    ev = sub.add_parser("eval", help="metrics for an existing trajectory or trace")
    ev.add_argument("--scenario", required=True, help="scenario YAML written by gen")
    ev.add_argument("--trajectory", default=None, help="joint-trajectory CSV")
    ev.add_argument("--trace", default=None, help="execution-trace CSV")
    ev.add_argument("--config", default=None)
    ev.add_argument("--verbose", action="store_true")

    solve = sub.add_parser("solve", help="single CoMOTO solve for one scenario")
    solve.add_argument("--scenario", required=True, help="scenario YAML written by gen")
    solve.add_argument("--config", default=None)
    solve.add_argument("--out", default=None)
    solve.add_argument("--verbose", action="store_true", help="print per-iteration trace")

    return parser


def _cmd_gen(args) -> int:
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    for sc in generate_scenarios(args.family, args.seeds):
        path = out / f"{sc.family}_{sc.seed}.yaml"
        save_scenario(sc, path)
        print(path)
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.family is not None:
        cfg = type(cfg)(**{**cfg.__dict__, "families": (args.family,)})
    if args.seeds is not None:
        cfg = type(cfg)(**{**cfg.__dict__, "seeds": tuple(args.seeds)})
    out = _out_dir(args)
    if args.verbose:
        print(
            f"running {len(cfg.families)} families x {len(cfg.seeds)} seeds "
            f"x {len(METHODS)} methods",
            file=sys.stderr,
        )
    start = time.perf_counter()
    rows = run_benchmark(cfg)
    paths = write_benchmark_outputs(rows, out, formats=tuple(args.format))
    elapsed = time.perf_counter() - start
    failed = sum(1 for r in rows if r["failed"])
    print(f"{len(rows)} rows ({failed} failed) in {elapsed:.1f} s")
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


def _planned_from_args(args):
    if (args.trajectory is None) == (args.trace is None):
        raise UsageError("eval requires exactly one of --trajectory or --trace")
    if args.trajectory is not None:
        return load_trajectory(args.trajectory)
    return load_trace(args.trace)


def _cmd_eval(args) -> int:
    cfg = load_config(args.config)
    sc = load_scenario(args.scenario)
    planned = _planned_from_args(args)
    bundle = prepare_scenario(sc, cfg)
    report = evaluate_run(
        sc.chain,
        planned,
        bundle.truth,
        bundle.nominal,
        bundle.goals,
        gaze_target=sc.human_object,
        threshold=cfg.separation_threshold,
        fov_deg=cfg.fov_deg,
    )
    print(
        json.dumps(
            {
                "dst_pct": report.dst_pct,
                "vis_pct": report.vis_pct,
                "legibility": report.legibility,
                "nom_dev": report.nom_dev,
                "completed": report.completed,
            },
            indent=2,
        )
    )
    return 0


def _cmd_solve(args) -> int:
    cfg = load_config(args.config)
    sc = load_scenario(args.scenario)
    bundle = prepare_scenario(sc, cfg)
    opts = OptimizerOptions(
        max_iters=cfg.optimizer.max_iters,
        grad_tol=cfg.optimizer.grad_tol,
        step_init=cfg.optimizer.step_init,
        verbose=args.verbose,
    )
    result = optimize(bundle.ctx, cfg.comoto_weights, bundle.nominal, opts)
    if args.verbose:
        for line in result.trace:
            print(line, file=sys.stderr)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{sc.family}_{sc.seed}_comoto.csv"
    save_trajectory(result.trajectory, path)
    print(
        json.dumps(
            {
                "scenario": f"{sc.family}/{sc.seed}",
                "iterations": result.iterations,
                "converged": result.converged,
                "initial_cost": result.initial_report.total,
                "final_cost": result.final_report.total,
                "wall_time": result.wall_time,
                "trajectory": str(path),
            },
            indent=2,
        )
    )
    return 0


_COMMANDS = {"gen": _cmd_gen, "run": _cmd_run, "eval": _cmd_eval, "solve": _cmd_solve}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (UsageError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
