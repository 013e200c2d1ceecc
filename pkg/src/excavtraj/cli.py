"""Command-line entry point: ``excavtraj {run,verify,seed-only,eval}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import yaml

from .scenario import (
    ScenarioError,
    evaluate_trajectory,
    load_scenario,
    make_seed,
    run,
    verify,
)
from .seed import SeedError
from .solver import EvaluationError
from .trajectory import KeypointTrajectory

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_MAX_ITERATIONS = 2
EXIT_INFEASIBLE = 3
EXIT_SEED = 4
EXIT_IO = 5
EXIT_VERIFY = 6

_STATUS_EXIT = {
    "converged": EXIT_OK,
    "seed": EXIT_OK,
    "max_iterations": EXIT_MAX_ITERATIONS,
    "infeasible_stall": EXIT_INFEASIBLE,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as max_iterations.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _parser():
    p = _Parser(prog="excavtraj", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(sp, out_required):
        sp.add_argument("--scenario", required=True,
                        help="scenario YAML path or bundled name (e.g. experiment1)")
        sp.add_argument("--out", required=out_required, help="output directory")

    r = sub.add_parser("run", help="seed, optimise and write results")
    scenario_args(r, True)
    r.add_argument("--fixed-time", action="store_true", help="freeze the time intervals")
    r.add_argument("--max-iters", type=int, default=None, help="iteration budget per pass")
    r.add_argument("--trace", action="store_true", help="log every solver iteration to stderr")

    s = sub.add_parser("seed-only", help="write results for the initial trajectory")
    scenario_args(s, True)

    e = sub.add_parser("eval", help="evaluate cost and constraints of a trajectory")
    scenario_args(e, False)
    e.add_argument("--trajectory", default=None,
                   help="summary.yaml or trajectory YAML; defaults to the scenario seed")

    v = sub.add_parser("verify", help="re-evaluate stored results against their summary")
    v.add_argument("--out", required=True, help="result directory written by run")
    return p


def _load_trajectory(path, dt):
    data = yaml.safe_load(Path(path).read_text())
    if isinstance(data, dict) and "trajectory" in data:
        data = data["trajectory"]
    return KeypointTrajectory.from_dict(data, dt=data.get("dt_s", dt))


def _cmd_run(args, optimize_):
    spec = load_scenario(args.scenario)
    t0 = time.perf_counter()
    bundle = run(spec, args.out, fixed_time=getattr(args, "fixed_time", False),
                 max_iterations=getattr(args, "max_iters", None), optimize_=optimize_)
    info = bundle.constraints.info
    print(f"status: {bundle.status}")
    print(f"cost: {bundle.cost:.9g}")
    print(f"duration_s: {bundle.trajectory.duration:.6g}")
    print(f"swept_volume_m3: {info['swept_volume_m3']:.6g}")
    print(f"max_tip_depth_m: {info['max_tip_depth_m']:.6g}")
    print(f"max_violation: {bundle.constraints.max_violation():.3g}")
    print(f"wall_time_s: {time.perf_counter() - t0:.2f}")
    return _STATUS_EXIT[bundle.status]


def _cmd_eval(args):
    spec = load_scenario(args.scenario)
    traj = _load_trajectory(args.trajectory, spec.dt) if args.trajectory else make_seed(spec)
    roll, rep = evaluate_trajectory(spec, traj)
    print(f"cost: {roll.cost:.9g}")
    print(f"duration_s: {traj.duration:.6g}")
    for name, value in rep.residuals.items():
        print(f"{name}: {value:.9g}")
    print(f"max_violation: {rep.max_violation():.3g}")
    return EXIT_OK


def _cmd_verify(args):
    res = verify(args.out)
    print(f"cost_rel_error: {res.cost_rel_error:.3g}")
    print(f"residual_abs_error: {res.residual_abs_error:.3g}")
    print(f"tau_rel_error: {res.tau_rel_error:.3g}")
    print("verified" if res.ok else "MISMATCH")
    return EXIT_OK if res.ok else EXIT_VERIFY


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(message)s", stream=sys.stderr)
    if getattr(args, "trace", False):
        logging.getLogger("excavtraj.solver").setLevel(logging.DEBUG)
    try:
        if args.command == "run":
            return _cmd_run(args, True)
        if args.command == "seed-only":
            return _cmd_run(args, False)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_verify(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SeedError as exc:
        print(f"seed failure: {exc}", file=sys.stderr)
        return EXIT_SEED
    except EvaluationError as exc:
        print(f"evaluation failure: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
