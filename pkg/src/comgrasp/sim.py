"""Quasi-static grip, lift, slip and transport of a rod held by a parallel gripper.

The rod pivots about the jaw line (the eelink y axis through the TCP). Its
weight produces the moment ``G |s| cos(theta)`` about that line, where ``s``
is the CoM position along the rod measured from the contact. Friction between
pads and rod resists with ``mu F pad_halfwidth``. Whenever the moment exceeds
that capacity the tilt grows at a rate proportional to the excess, so the rod
settles where the two balance or slides out past ``theta_max``. Once tilted,
the weight component ``G sin(theta)`` along the rod can beat the axial
friction ``mu F`` and the contact then creeps away from the CoM.

Transport is modelled as holding the rod under an amplified load (the
worst-case static pose of the move).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .bench import measure_held
from .errors import ComGraspError, InvalidInput
from .scene import GraspPose, RodObject
from .solver import plan_regrasp
from .transforms import Transform, rot_y
from .vision import render_mask, topdown_rod_pose

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlipParams:
    mu: float = 0.4
    pad_halfwidth: float = 0.008
    theta_max: float = math.radians(45.0)
    dt: float = 1e-3
    rot_time: float = 0.05  # s; tilt rate = excess moment / (rot_time * capacity)
    trans_time: float = 0.05  # s; creep rate = excess force / (trans_time * capacity) * length
    duration: float = 1.0  # s of simulated hold per phase

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidInput("mu must be > 0")
        if not self.dt > 0:
            raise InvalidInput("dt must be > 0")
        if not (self.pad_halfwidth > 0 and self.rot_time > 0 and self.trans_time > 0 and self.duration > 0):
            raise InvalidInput("pad_halfwidth, rot_time, trans_time and duration must be > 0")
        if not 0 < self.theta_max <= math.pi / 2:
            raise InvalidInput("theta_max must lie in (0, pi/2]")

    @classmethod
    def from_settings(cls, settings, mu: float | None = None) -> "SlipParams":
        return cls(
            mu=settings.mu if mu is None else mu,
            pad_halfwidth=settings.pad_halfwidth,
            theta_max=settings.theta_max,
            dt=settings.dt,
            rot_time=settings.rot_time,
            trans_time=settings.trans_time,
            duration=settings.duration,
        )


@dataclass(frozen=True)
class LiftOutcome:
    """Result of one hold phase.

    ``trajectory`` rows are ``(t, theta, contact)``: time in s, signed tilt in
    rad (the side-camera image angle) and the contact position along the rod
    axis from its center, in the rod's own frame.
    """

    final_theta: float
    slipped: bool
    dropped: bool
    trajectory: np.ndarray
    contact: float  # final contact position along the rod (rod frame)

    def __post_init__(self):
        if self.dropped and not self.slipped:
            raise ComGraspError("a dropped rod must have slipped")

    @property
    def duration(self) -> float:
        return float(self.trajectory[-1, 0])

    def state_at(self, t: float) -> tuple[float, float]:
        """(theta, contact) at the last recorded step not after ``t``."""
        k = int(np.searchsorted(self.trajectory[:, 0], t, side="right")) - 1
        row = self.trajectory[max(k, 0)]
        return float(row[1]), float(row[2])

    def to_text(self) -> str:
        """Tab-separated time series for debugging."""
        lines = ["t\ttheta\tcontact"]
        lines += [f"{t!r}\t{th!r}\t{c!r}" for t, th, c in self.trajectory.tolist()]
        return "\n".join(lines) + "\n"


def axis_sign(rod: RodObject, grasp: GraspPose) -> float:
    """+1 if the rod's +x agrees with the eelink x axis of ``grasp``, else -1."""
    return 1.0 if rod.axis @ grasp.eelink_rotation()[:, 0] >= 0 else -1.0


def contact_of(rod: RodObject, grasp: GraspPose) -> float:
    """Contact position along the rod (rod frame) for a grasp on a resting rod."""
    if abs(rod.axis[2]) > 1e-9:
        raise InvalidInput("rod must lie flat on the table")
    rel = grasp.position[:2] - rod.center[:2]
    along = float(rel @ rod.axis[:2])
    lateral = abs(float(rel[0] * rod.axis[1] - rel[1] * rod.axis[0]))
    if lateral > rod.radius + 1e-9:
        raise InvalidInput(f"grasp misses the rod by {lateral - rod.radius:.4g} m")
    if abs(along) > rod.length / 2:
        raise InvalidInput("grasp lies past the rod end")
    return along


def tilt_sign(rod: RodObject, grasp: GraspPose, contact: float) -> float:
    """Sign of the tilt angle: the CoM side of the rod goes down."""
    s = axis_sign(rod, grasp) * (rod.com_offset - contact)
    return -1.0 if s > 0 else 1.0


def simulate_lift(
    rod: RodObject,
    grasp: GraspPose,
    params: SlipParams = SlipParams(),
    load: float = 1.0,
    start: tuple[float, float] | None = None,
) -> LiftOutcome:
    """Hold the rod for ``params.duration`` and integrate rotational and axial slip.

    ``rod`` is the resting rod the grasp was planned on. ``start`` continues a
    previous phase from its ``(theta, contact)``; ``load`` scales the weight
    (1 for a static hold, above 1 for transport).
    """
    if start is None:
        theta, contact = 0.0, contact_of(rod, grasp)
    else:
        theta, contact = abs(float(start[0])), float(start[1])
    G = load * rod.weight
    half = rod.length / 2
    tau_f = params.mu * grasp.grip_force * params.pad_halfwidth
    f_f = params.mu * grasp.grip_force
    k_rot = params.dt / (params.rot_time * tau_f)
    k_trans = params.dt * rod.length / (params.trans_time * f_f)
    dt = params.dt
    n_steps = int(round(params.duration / dt))

    sign = tilt_sign(rod, grasp, contact)
    rows = [(0.0, sign * theta, contact)]
    slipped = dropped = False
    for k in range(1, n_steps + 1):
        s = rod.com_offset - contact
        tau_g = G * abs(s) * math.cos(theta)
        d_theta = k_rot * (tau_g - tau_f) if tau_g > tau_f else 0.0
        theta += d_theta
        f_a = G * math.sin(theta)
        d_contact = k_trans * (f_a - f_f) if f_a > f_f else 0.0
        if d_contact:
            contact -= math.copysign(d_contact, s) if s else 0.0
        if d_theta == 0.0 and d_contact == 0.0:
            break  # static friction holds
        slipped = True
        if theta > params.theta_max or abs(contact) > half:
            dropped = True
            theta = min(theta, math.pi / 2)
            rows.append((k * dt, sign * theta, contact))
            break
        rows.append((k * dt, sign * theta, contact))
        if d_theta < 1e-12 and d_contact < 1e-12:
            break  # settled to floating-point resolution
    return LiftOutcome(sign * theta, slipped, dropped, np.array(rows), contact)


def held_pose(rod: RodObject, grasp: GraspPose, theta: float, contact: float, lift: float = 0.0) -> RodObject:
    """The rod as it hangs in the gripper.

    The jaws square the rod to the eelink x axis with the TCP on the rod axis
    at ``contact``; the rod keeps its resting roll (CoM below the axis) and is
    then tilted by ``theta`` about the jaw line.
    """
    E = grasp.eelink_frame(lift)
    sgn = axis_sign(rod, grasp)
    x = np.array([sgn, 0.0, 0.0])
    z = np.array([0.0, 0.0, -1.0])  # world up in eelink coordinates
    R_rest = np.column_stack([x, np.cross(z, x), z])
    tilt = rot_y(theta)
    pose_e = Transform(tilt @ R_rest, tilt @ (-contact * x))
    return replace(rod, world_pose=E @ pose_e)


def payload_offset(rod: RodObject, grasp: GraspPose, theta: float, contact: float) -> np.ndarray:
    """Eelink-frame vector from the TCP to the CoM of the held rod."""
    held = held_pose(rod, grasp, theta, contact)
    return grasp.eelink_frame(0.0).inverse().apply(held.com_world())


def placed_back(rod: RodObject, grasp: GraspPose, contact: float, table_z: float = 0.0) -> RodObject:
    """The rod lowered onto the table and released, contact point under the TCP."""
    axis = axis_sign(rod, grasp) * grasp.eelink_rotation()[:, 0]
    center = grasp.position - contact * axis
    return rod.resting(center[0], center[1], math.atan2(axis[1], axis[0]), table_z)


PLANNERS = ("naive", "regrasp")


@dataclass(frozen=True)
class EpisodeOutcome:
    success: bool
    trials_used: int
    first_lift: LiftOutcome
    slip_detected: bool = False
    regrasp: GraspPose | None = None
    com_estimate: float | None = None  # along the observed rod axis, m
    failure: str | None = None  # phase that lost the rod


def first_slip_frame(bench, rod: RodObject, grasp: GraspPose, outcome: LiftOutcome, duration: float):
    """Earliest side-camera frame flagged as slipping, as ``(time, observation)``.

    Frames arrive at the side camera rate while the rod is held. Tilt and
    contact drift only grow during a hold, so the flag is monotone in time and
    the first flagged frame is found by bisection. Returns ``None`` when no
    frame before a drop is flagged.
    """
    rate = bench.scene.side_camera.rate
    lift = bench.scene.lift_height
    t_last = outcome.trajectory[-2, 0] if outcome.dropped and len(outcome.trajectory) > 1 else duration
    if outcome.dropped and len(outcome.trajectory) < 2:
        return None
    n = int(math.floor(t_last * rate + 1e-9))

    def look(k, initial=None):
        theta, contact = outcome.state_at(k / rate)
        return bench.observe(held_pose(rod, grasp, theta, contact, lift), grasp, initial)

    initial = look(0).contact_offset
    last = look(n, initial)
    if not last.slipped:
        return None
    lo, hi, hit = 0, n, last
    while hi - lo > 1:
        mid = (lo + hi) // 2
        obs = look(mid, initial)
        if obs.slipped:
            hi, hit = mid, obs
        else:
            lo = mid
    return hi / rate, hit


def _transport(rod, grasp, params, load, lift_outcome):
    start = (lift_outcome.final_theta, lift_outcome.contact)
    return simulate_lift(rod, grasp, params, load=load, start=start)


def run_pick_place(
    rod: RodObject,
    grasp: GraspPose,
    params: SlipParams = SlipParams(),
    planner: str = "naive",
    bench=None,
    rng=None,
    exec_sigma: float = 0.0,
    load_factor: float = 1.3,
) -> EpisodeOutcome:
    """Pick ``rod`` (resting) with ``grasp``, lift, transport and place it.

    naive: success iff the rod survives the lift and the transport.
    regrasp: if the side camera flags a slip during the first lift, the
    torques are captured at that moment, the CoM is estimated, the rod is put
    back and picked again at the planned pose (shifted by execution noise of
    standard deviation ``exec_sigma`` along the rod). Needs a ``bench``.
    """
    if planner not in PLANNERS:
        raise InvalidInput(f"unknown planner {planner!r}")
    rng = np.random.default_rng(rng)
    noise_seed = int(rng.integers(2**63))
    exec_shift = float(rng.normal(0.0, exec_sigma)) if exec_sigma > 0 else 0.0

    first = simulate_lift(rod, grasp, params)
    detection = None
    if planner == "regrasp":
        if bench is None:
            raise InvalidInput("the regrasp planner needs a bench")
        if first.slipped:
            detection = first_slip_frame(bench, rod, grasp, first, params.duration)

    if detection is None:
        if first.dropped:
            return EpisodeOutcome(False, 1, first, failure="lift")
        moved = _transport(rod, grasp, params, load_factor, first)
        return EpisodeOutcome(not moved.dropped, 1, first, failure="transport" if moved.dropped else None)

    t_slip, _ = detection
    theta, contact = first.state_at(t_slip)
    lift = bench.scene.lift_height
    try:
        meas = measure_held(bench, held_pose(rod, grasp, theta, contact, lift), grasp, noise_seed)
    except ComGraspError as exc:
        log.warning("estimation failed (%s); keeping the first grasp", exc)
        moved = _transport(rod, grasp, params, load_factor, first)
        return EpisodeOutcome(not moved.dropped, 1, first, True,
                              failure="transport" if moved.dropped else None)

    table_z = bench.scene.table_height
    placed = placed_back(rod, grasp, contact, table_z)
    x_e = grasp.eelink_rotation()[:, 0]
    pose = topdown_rod_pose(render_mask(placed, bench.top_camera()), table_z, reference_direction=x_e)
    planned = plan_regrasp(pose, meas.com, grasp.grip_force)
    shift = exec_shift * pose.R[:, 0]
    second = replace(planned, x=planned.x + shift[0], y=planned.y + shift[1])
    try:
        contact_of(placed, second)
    except InvalidInput:
        return EpisodeOutcome(False, 2, first, True, second, meas.com.x_com_obj, failure="regrasp")
    lift2 = simulate_lift(placed, second, params)
    if lift2.dropped:
        return EpisodeOutcome(False, 2, first, True, second, meas.com.x_com_obj, failure="lift")
    moved = _transport(placed, second, params, load_factor, lift2)
    return EpisodeOutcome(not moved.dropped, 2, first, True, second, meas.com.x_com_obj,
                          failure="transport" if moved.dropped else None)
