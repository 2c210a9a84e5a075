"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 malformed input, 4 unobservable
configuration, 5 solver divergence, 6 nonphysical weight, 1 any other
package error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from .bench import Bench
from .errors import (
    ComGraspError,
    DivergenceError,
    InvalidInput,
    NonphysicalWeightError,
    RecordParseError,
    UnobservableError,
)
from .harness import (
    accuracy_csv,
    binned_summary,
    run_accuracy_campaign,
    run_stability_campaign,
    skipped_csv,
    stability_json,
    summary_csv,
)
from .kinematics import lever_arms
from .records import read_snapshots, result_record
from .sceneio import default_scene_path, load_scene
from .sim import PLANNERS
from .solver import SolverConfig, solve_gd, solve_ls_oracle
from .vision import SLIP_DISTANCE, THETA_SLIP, render_mask, write_pgm

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_MALFORMED = 3
EXIT_UNOBSERVABLE = 4
EXIT_DIVERGENCE = 5
EXIT_NONPHYSICAL = 6


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonnegative(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="comgrasp", description="Torque-based CoM estimation for rod regrasping.")
    p.add_argument("-v", "--verbose", action="store_true", help="log skipped trials and warnings")
    sub = p.add_subparsers(dest="command", required=True)

    def campaign(name, help_):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--scene", type=Path, default=None, help="scene file (default: the shipped benchmark)")
        c.add_argument("--trials", type=_positive_int, default=500, help="trials per object (default 500)")
        c.add_argument("--seed", type=int, default=None, help="campaign seed (default: from the scene)")
        c.add_argument("--noise", type=_nonnegative, default=None,
                       help="torque noise sigma in N m (default: the scene preset)")
        c.add_argument("--out", type=Path, default=Path("."), help="output directory")
        c.add_argument("--workers", type=_positive_int, default=1, help="worker processes")
        c.add_argument("--theta-slip", type=float, default=math.degrees(THETA_SLIP),
                       help="tilt that counts as slipping, degrees (default 10)")
        c.add_argument("--slip-distance", type=float, default=SLIP_DISTANCE,
                       help="contact drift that counts as slipping, m (default 0.005)")
        return c

    campaign("accuracy", "CoM-estimation accuracy versus tilt angle")
    s = campaign("stability", "pick-and-place success with and without regrasping")
    s.add_argument("--planner", choices=PLANNERS + ("both",), default="both")

    v = sub.add_parser("solve", help="estimate the payload CoM from a snapshot record")
    v.add_argument("snapshots", type=Path)
    v.add_argument("--chain", type=Path, required=True, help="scene file describing the arm")
    v.add_argument("--method", choices=("gd", "oracle"), default="gd")
    v.add_argument("--learning-rate", type=float, default=SolverConfig.learning_rate)
    v.add_argument("--max-iterations", type=_positive_int, default=SolverConfig.max_iterations)
    v.add_argument("--tol", type=float, default=SolverConfig.convergence_tol)
    v.add_argument("--no-backtracking", action="store_true", help="use a fixed step")

    r = sub.add_parser("render-mask", help="write the top-down mask of the scene as a PGM image")
    r.add_argument("--scene", type=Path, default=None)
    r.add_argument("--object", default=None, help="object name (default: all objects)")
    r.add_argument("--out", type=Path, required=True, help="output .pgm file")
    return p


def _bench(args) -> Bench:
    scene = load_scene(args.scene or default_scene_path())
    if not scene.objects:
        raise InvalidInput("the scene has no objects")
    return Bench(scene, noise_sigma=args.noise, theta_slip=math.radians(args.theta_slip),
                 slip_distance=args.slip_distance)


def _cmd_accuracy(args) -> int:
    bench = _bench(args)
    records, skipped = run_accuracy_campaign(bench, args.trials, args.seed, args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "accuracy.csv").write_text(accuracy_csv(records))
    (args.out / "accuracy_summary.csv").write_text(summary_csv(records))
    (args.out / "accuracy_skipped.csv").write_text(skipped_csv(skipped))
    print(f"{len(records)} records, {len(skipped)} skipped trials -> {args.out}")
    for (obj, (lo, hi)), (n, mean) in binned_summary(records).items():
        print(f"  {obj}  theta [{lo:g},{hi:g})  n={n:4d}  mean accuracy {mean:.4f}")
    return EXIT_OK


def _cmd_stability(args) -> int:
    bench = _bench(args)
    planners = PLANNERS if args.planner == "both" else (args.planner,)
    table = run_stability_campaign(bench, args.trials, args.seed, planners, args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "stability.json").write_text(stability_json(table))
    for obj, cells in table.items():
        rates = "  ".join(f"{p} {cells[p]['success_rate']:.3f}" for p in planners)
        print(f"  {obj}  {rates}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    chain = load_scene(args.chain).chain
    before, after = read_snapshots(args.snapshots)
    if before.q.shape[0] != chain.n:
        raise RecordParseError(f"record has {before.q.shape[0]} joints, chain has {chain.n}", None, str(args.snapshots))
    arms = lever_arms(chain, before.q)
    if args.method == "oracle":
        est = solve_ls_oracle(before, after, arms)
    else:
        config = SolverConfig(args.learning_rate, args.max_iterations, args.tol,
                              backtracking=not args.no_backtracking)
        est = solve_gd(before, after, arms, config)
    print(result_record(est))
    return EXIT_OK


def _cmd_render(args) -> int:
    scene = load_scene(args.scene or default_scene_path())
    objects = scene.objects
    if args.object is not None:
        objects = [o for o in objects if o.name == args.object]
        if not objects:
            raise InvalidInput(f"no object named {args.object!r}")
    bench = Bench(scene)
    mask = render_mask(objects, bench.top_camera())
    write_pgm(mask, args.out)
    print(f"{mask.grid.shape[1]}x{mask.grid.shape[0]} mask, {int(mask.grid.sum())} occupied pixels -> {args.out}")
    return EXIT_OK


COMMANDS = {"accuracy": _cmd_accuracy, "stability": _cmd_stability, "solve": _cmd_solve,
            "render-mask": _cmd_render}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (RecordParseError, InvalidInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except UnobservableError as exc:
        print(f"error: unobservable configuration: {exc}", file=sys.stderr)
        return EXIT_UNOBSERVABLE
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except NonphysicalWeightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONPHYSICAL
    except ComGraspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
