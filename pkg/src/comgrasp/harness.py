"""Experiment campaigns: CoM-estimation accuracy versus tilt, and pick-place stability.

Every trial draws from its own stream ``SeedSequence([seed, object, trial])``
so results do not depend on worker scheduling, and the two planners of the
stability campaign see identical rods, placements, friction and noise.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bench import Bench, measure_held
from .errors import ComGraspError, InvalidInput
from .scene import GraspPose, sample_random_grasp
from .sim import PLANNERS, SlipParams, axis_sign, held_pose, run_pick_place, simulate_lift
from .vision import grasp_from_topdown, render_mask

log = logging.getLogger(__name__)

ACCURACY_COLUMNS = ("object", "trial", "theta_deg", "accuracy", "pos_esti", "pos_real")
SUMMARY_COLUMNS = ("object", "theta_bin", "count", "mean_accuracy")
THETA_BINS = ((0.0, 5.0), (5.0, 20.0), (20.0, 45.0))


def accuracy_metric(pos_esti: float, pos_real: float, l: float) -> float:
    """1 - 5 |pos_esti - pos_real| / l, unclamped."""
    if not l > 0:
        raise InvalidInput("rod length must be > 0")
    return 1 - 5 * abs(pos_esti - pos_real) / l


@dataclass(frozen=True)
class AccuracyRecord:
    object: str
    trial: int
    theta_deg: float
    accuracy: float
    pos_esti: float
    pos_real: float


@dataclass(frozen=True)
class SkippedTrial:
    object: str
    trial: int
    reason: str


def trial_rng(seed: int, obj_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, obj_index, trial]))


def _setup(bench: Bench, obj_index: int, rng: np.random.Generator):
    """Random placement in the workspace and per-episode friction."""
    sc = bench.scene
    rod = sc.objects[obj_index]
    x = rng.uniform(*sc.workspace_x)
    y = rng.uniform(*sc.workspace_y)
    yaw = rng.uniform(-math.pi, math.pi)
    spread = sc.slip.mu_spread
    mu = sc.slip.mu * rng.uniform(1 - spread, 1 + spread)
    return rod.resting(x, y, yaw, sc.table_height), SlipParams.from_settings(sc.slip, mu)


# ------------------------------------------------------------------- accuracy


def accuracy_trial(bench: Bench, obj_index: int, trial: int, seed: int):
    """Random grasp, first lift, torque capture, solve, project; one record."""
    rng = trial_rng(seed, obj_index, trial)
    rod, params = _setup(bench, obj_index, rng)
    grasp_seed, noise_seed = rng.integers(2**63, size=2)
    grasp = sample_random_grasp(rod, int(grasp_seed), bench.scene.grip_force)
    lift = simulate_lift(rod, grasp, params)
    if lift.dropped:
        return SkippedTrial(rod.name, trial, "dropped during lift")
    held = held_pose(rod, grasp, lift.final_theta, lift.contact, bench.scene.lift_height)
    try:
        m = measure_held(bench, held, grasp, int(noise_seed))
    except ComGraspError as exc:
        return SkippedTrial(rod.name, trial, f"{type(exc).__name__}: {exc}")
    pos_esti = axis_sign(rod, grasp) * m.com.x_com_obj
    acc = accuracy_metric(pos_esti, rod.com_offset, rod.length)
    return AccuracyRecord(rod.name, trial, abs(math.degrees(m.observation.theta)), acc, pos_esti, rod.com_offset)


def _accuracy_chunk(args):
    bench, jobs, seed = args
    return [accuracy_trial(bench, o, t, seed) for o, t in jobs]


def _stability_chunk(args):
    bench, jobs, seed = args
    return [stability_trial(bench, o, t, seed, p) for o, t, p in jobs]


def _run(fn, bench, jobs, seed, workers):
    if workers <= 1:
        return fn((bench, jobs, seed))
    size = max(1, math.ceil(len(jobs) / (4 * workers)))
    chunks = [jobs[i : i + size] for i in range(0, len(jobs), size)]
    with ProcessPoolExecutor(workers) as pool:
        parts = pool.map(fn, [(bench, c, seed) for c in chunks])
        return [r for part in parts for r in part]


def run_accuracy_campaign(bench: Bench, trials: int = 500, seed: int | None = None, workers: int = 1):
    """Returns (records sorted by theta, skipped trials in trial order)."""
    seed = bench.scene.seed if seed is None else seed
    jobs = [(o, t) for o in range(len(bench.scene.objects)) for t in range(trials)]
    results = _run(_accuracy_chunk, bench, jobs, seed, workers)
    records = [r for r in results if isinstance(r, AccuracyRecord)]
    skipped = [r for r in results if isinstance(r, SkippedTrial)]
    for s in skipped:
        log.info("skipped %s trial %d: %s", s.object, s.trial, s.reason)
    records.sort(key=lambda r: (r.theta_deg, r.object, r.trial))
    return records, skipped


def accuracy_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ACCURACY_COLUMNS)
    for r in records:
        w.writerow([r.object, r.trial, repr(r.theta_deg), repr(r.accuracy), repr(r.pos_esti), repr(r.pos_real)])
    return buf.getvalue()


def theta_bin(theta_deg: float):
    for lo, hi in THETA_BINS:
        if lo <= theta_deg < hi or (hi == THETA_BINS[-1][1] and theta_deg == hi):
            return lo, hi
    return None


def binned_summary(records) -> dict:
    """{(object, (lo, hi)): (count, mean accuracy)} over the fixed tilt bins."""
    acc = {}
    for r in records:
        b = theta_bin(r.theta_deg)
        if b is not None:
            acc.setdefault((r.object, b), []).append(r.accuracy)
    return {k: (len(v), float(np.mean(v))) for k, v in sorted(acc.items())}


def summary_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for (obj, (lo, hi)), (n, mean) in binned_summary(records).items():
        w.writerow([obj, f"[{lo:g},{hi:g})", n, repr(mean)])
    return buf.getvalue()


def skipped_csv(skipped) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("object", "trial", "reason"))
    for s in skipped:
        w.writerow([s.object, s.trial, s.reason])
    return buf.getvalue()


# ------------------------------------------------------------------ stability


def naive_grasp(bench: Bench, rod, rng: np.random.Generator) -> GraspPose:
    """Geometric-center grasp from the top-down image, with execution noise."""
    sc = bench.scene
    g = grasp_from_topdown(render_mask(rod, bench.top_camera()), sc.table_height, grip_force=sc.grip_force)
    shift = rng.normal(0.0, sc.exec_sigma) if sc.exec_sigma > 0 else 0.0
    x_e = g.eelink_rotation()[:, 0]
    return GraspPose(g.x + shift * x_e[0], g.y + shift * x_e[1], g.z, g.yaw, g.grip_force)


def stability_trial(bench: Bench, obj_index: int, trial: int, seed: int, planner: str) -> tuple:
    """(object, trial, planner, success, trials used, failure phase)."""
    rng = trial_rng(seed, obj_index, trial)
    rod, params = _setup(bench, obj_index, rng)
    grasp = naive_grasp(bench, rod, rng)
    episode_seed = int(rng.integers(2**63))
    out = run_pick_place(rod, grasp, params, planner, bench=bench, rng=episode_seed,
                         exec_sigma=bench.scene.exec_sigma, load_factor=bench.scene.load_factor)
    return rod.name, trial, planner, out.success, out.trials_used, out.failure


def run_stability_campaign(bench: Bench, trials: int = 500, seed: int | None = None,
                           planners=PLANNERS, workers: int = 1) -> dict:
    """{object: {planner: {"success_rate", "successes", "trials"}}}."""
    seed = bench.scene.seed if seed is None else seed
    for p in planners:
        if p not in PLANNERS:
            raise InvalidInput(f"unknown planner {p!r}")
    jobs = [(o, t, p) for o in range(len(bench.scene.objects)) for p in planners for t in range(trials)]
    table = {}
    for name, _, planner, success, _, _ in _run(_stability_chunk, bench, jobs, seed, workers):
        cell = table.setdefault(name, {}).setdefault(planner, {"successes": 0, "trials": 0})
        cell["successes"] += int(success)
        cell["trials"] += 1
    for cells in table.values():
        for cell in cells.values():
            cell["success_rate"] = cell["successes"] / cell["trials"]
    return table


def stability_json(table: dict) -> str:
    return json.dumps(table, indent=2, sort_keys=True) + "\n"
