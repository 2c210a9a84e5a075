"""Payload CoM estimation from before/after joint-torque pairs.

For joint i with world axis a_i and lever arm r_i (joint -> eelink), the
after/before torque difference of a payload of weight G at eelink-frame offset
Δr = (Δr_x, Δr_y, ·) satisfies

    a_i · ((r_i + R_ee Δr) × (0, 0, -G)) + ΔT_i = 0.

The vertical component of Δr is not identifiable and is dropped. Writing
m_i(p) = a_i · (p × e_z), each joint contributes the residual

    e_i = ΔT_i - G (m_i(r_i) + Δr_x m_i(R_ee e_x) + Δr_y m_i(R_ee e_y)),

and ``solve_gd`` minimizes Σ e_i² over (Δr_x, Δr_y, G) by gradient descent.
``solve_ls_oracle`` uses the linear reparametrization (GΔr_x, GΔr_y, G) as an
independent check.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidInput, NonphysicalWeightError, UnobservableError
from .kinematics import LeverArms
from .scene import GraspPose, ObjectTransform
from .sensing import TorqueSnapshot, check_pair
from .transforms import Transform

log = logging.getLogger(__name__)

E_Z = np.array([0.0, 0.0, 1.0])
RANK_RTOL = 1e-9
EPS = float(np.finfo(float).eps)
NONMONOTONE_WINDOW = 10


@dataclass(frozen=True)
class ComEstimate:
    delta_r_xy: np.ndarray
    weight: float
    residual: float
    iterations: int

    @property
    def delta_r_x(self) -> float:
        return float(self.delta_r_xy[0])

    @property
    def delta_r_y(self) -> float:
        return float(self.delta_r_xy[1])


@dataclass(frozen=True)
class SolverConfig:
    learning_rate: float = 1e-2
    max_iterations: int = 10_000
    convergence_tol: float = 1e-14
    init: str = "heuristic"  # or "zero"
    backtracking: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInput("learning_rate must be > 0")
        if self.max_iterations < 1:
            raise InvalidInput("max_iterations must be >= 1")
        if self.init not in ("heuristic", "zero"):
            raise InvalidInput(f"unknown init rule {self.init!r}")


@dataclass(frozen=True)
class ObjectFrameCom:
    x_com_obj: float
    out_of_range: bool = False
    raw: float | None = None


@dataclass(frozen=True)
class _Terms:
    dT: np.ndarray
    c: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    lever_norm: np.ndarray

    def design(self) -> np.ndarray:
        """Columns multiply (GΔr_x, GΔr_y, G)."""
        return np.column_stack([self.alpha, self.beta, self.c])


def _terms(before: TorqueSnapshot, after: TorqueSnapshot, arms: LeverArms) -> _Terms:
    check_pair(before, after)
    n = len(arms)
    if before.tau.shape[0] != n:
        raise InvalidInput(f"snapshots have {before.tau.shape[0]} joints, lever arms {n}")

    def m(p):
        return np.einsum("ij,ij->i", arms.axes, np.cross(p, E_Z))

    R = arms.eelink_rotation
    return _Terms(
        dT=after.tau - before.tau,
        c=m(arms.r_ee),
        alpha=m(np.broadcast_to(R[:, 0], (n, 3))),
        beta=m(np.broadcast_to(R[:, 1], (n, 3))),
        lever_norm=np.linalg.norm(arms.r_ee, axis=1),
    )


def _errors(t: _Terms, x: np.ndarray) -> np.ndarray:
    dx, dy, G = x
    return t.dT - G * (t.c + dx * t.alpha + dy * t.beta)


def residual(before, after, arms: LeverArms, candidate) -> float:
    """Objective Σ_i e_i² at ``candidate = (Δr_x, Δr_y, G_o)``."""
    e = _errors(_terms(before, after, arms), np.asarray(candidate, dtype=float))
    return float(e @ e)


def residual_gradient(before, after, arms: LeverArms, candidate) -> np.ndarray:
    t = _terms(before, after, arms)
    return _gradient(t, np.asarray(candidate, dtype=float))


def _gradient(t: _Terms, x: np.ndarray) -> np.ndarray:
    dx, dy, G = x
    e = _errors(t, x)
    return -2.0 * np.array([G * (e @ t.alpha), G * (e @ t.beta), e @ (t.c + dx * t.alpha + dy * t.beta)])


def _check_observable(t: _Terms) -> np.ndarray:
    A = t.design()
    s = np.linalg.svd(A, compute_uv=False)
    if A.shape[0] < 3 or s[0] == 0 or s[-1] <= RANK_RTOL * s[0]:
        rank = int((s > RANK_RTOL * s[0]).sum()) if s.size and s[0] > 0 else 0
        raise UnobservableError(
            f"torque design has rank {rank} < 3; joint axes/levers cannot separate CoM and weight"
        )
    return A


def solve_ls_oracle(before, after, arms: LeverArms) -> ComEstimate:
    """Global minimizer via normal equations in (GΔr_x, GΔr_y, G)."""
    t = _terms(before, after, arms)
    A = _check_observable(t)
    u, v, w = np.linalg.solve(A.T @ A, A.T @ t.dT)
    if not w > 0:
        raise NonphysicalWeightError(
            f"estimated weight {w:.4g} N <= 0; check the torque sign convention"
        )
    x = np.array([u / w, v / w, w])
    e = _errors(t, x)
    return ComEstimate(x[:2], float(w), float(e @ e), 0)


def _initial_point(t: _Terms, config: SolverConfig, mean_lever: float) -> np.ndarray:
    G0 = 1.0
    if config.init == "heuristic":
        G0 = float(np.linalg.norm(t.dT)) / mean_lever if mean_lever > 0 else 0.0
        if not (math.isfinite(G0) and G0 > 0):
            G0 = 1.0
    return np.array([0.0, 0.0, G0])


def solve_gd(before, after, arms: LeverArms, config: SolverConfig = SolverConfig()) -> ComEstimate:
    """Gradient descent on the bilinear objective in (Δr_x, Δr_y, G_o).

    Descent runs in linearly rescaled coordinates in which the Gauss-Newton
    curvature at the starting point is the identity, so one learning rate fits
    any arm and badly conditioned geometries converge in tens of steps.
    With ``backtracking`` the trial step (``learning_rate`` first, then the
    Barzilai-Borwein length) is halved until it passes a nonmonotone
    sufficient-decrease test against the worst of the last 10 objective
    values; convergence is an objective decrease below ``convergence_tol``
    over that window. Without it a fixed step is used, convergence is judged
    step by step, and 10 consecutive increases raise
    ``DivergenceError``.
    """
    t = _terms(before, after, arms)
    _check_observable(t)

    mean_lever = float(np.linalg.norm(np.mean(arms.r_ee, axis=0)))
    x = _initial_point(t, config, mean_lever)
    # x = S z: at the starting point the Gauss-Newton curvature in z is the identity
    _, R = np.linalg.qr(t.design())
    S = np.linalg.inv(R * np.array([x[2], x[2], 1.0]))
    S_T = S.T

    def F(z):
        with np.errstate(over="ignore", invalid="ignore"):
            e = _errors(t, S @ z)
            return float(e @ e)

    def dF(z):
        return S_T @ _gradient(t, S @ z)

    dT_norm = float(np.linalg.norm(t.dT))
    z = np.linalg.solve(S, x)
    f = F(z)
    g = dF(z)
    step = config.learning_rate
    recent = deque([f], maxlen=NONMONOTONE_WINDOW)
    best_z, best_f, best_g = z, f, float(np.linalg.norm(g))
    best_history = deque([f], maxlen=NONMONOTONE_WINDOW + 1)
    increases = stalled = 0
    it = 0
    for it in range(1, config.max_iterations + 1):
        if config.backtracking:
            trial = step
            g_norm = float(np.linalg.norm(g))
            f_ref = max(recent)
            band = 16 * EPS * (math.sqrt(f) * dT_norm + f)
            accepted = False
            while trial >= 1e-30:
                z_new = z - trial * g
                f_new = F(z_new)
                if f_new < f or f + band < f_new < f_ref - 1e-4 * trial * g_norm**2:
                    accepted = True
                    break
                # below the objective's rounding level, judge by the gradient
                if f_new <= f + band and float(np.linalg.norm(dF(z_new))) < g_norm:
                    accepted = True
                    break
                trial *= 0.5
            if not accepted:
                break  # no descent left at floating-point resolution
        else:
            z_new = z - step * g
            f_new = F(z_new)
            increases = increases + 1 if f_new > f else 0
            if increases >= 10 or not math.isfinite(f_new):
                raise DivergenceError(
                    f"objective increased for {increases} consecutive steps; "
                    f"try a smaller learning_rate than {step:g}"
                )
        g_new = dF(z_new)
        if config.backtracking:
            # Barzilai-Borwein length for the next trial step
            s_k, y_k = z_new - z, g_new - g
            sy = float(s_k @ y_k)
            step = float(s_k @ s_k) / sy if sy > 0 else 2.0 * trial
        stalled = stalled + 1 if float(np.linalg.norm(z_new - z)) <= EPS * float(np.linalg.norm(z_new)) else 0
        z, f, g = z_new, f_new, g_new
        recent.append(f)
        g_norm_new = float(np.linalg.norm(g))
        band = 16 * EPS * (math.sqrt(best_f) * dT_norm + best_f)
        if f < best_f - band or (f <= best_f + band and g_norm_new < best_g):
            # within rounding of the objective, prefer the smaller gradient
            best_z, best_f, best_g = z, f, g_norm_new
        if config.backtracking:
            # nonmonotone steps: judge progress over the whole window
            best_history.append(best_f)
            full = len(best_history) == best_history.maxlen
            decrease = best_history[0] - best_f if full and f == best_f else math.inf
        else:
            decrease = recent[-2] - f
        if 0 <= decrease < config.convergence_tol or stalled > 2:
            break
    if config.backtracking:
        z, f = best_z, best_f
    x = S @ z
    if not x[2] > 0:
        raise NonphysicalWeightError(f"estimated weight {x[2]:.4g} N <= 0")
    return ComEstimate(x[:2].copy(), float(x[2]), f, it)


def project_to_object(est: ComEstimate, M: ObjectTransform, length: float | None = None) -> ObjectFrameCom:
    """CoM coordinate along the rod in the object frame, with z_object forced to 0.

    x = (r11 - r13 r31/r33) Δr_x + (r12 - r13 r32/r33) Δr_y + p_x - (r13/r33) p_z.
    When ``length`` is given the result is clamped to the rod and flagged.
    """
    M.require_regular()
    r = M.r
    r33 = r(3, 3)
    px, _, pz = M.p
    dx, dy = est.delta_r_x, est.delta_r_y
    x = (
        (r(1, 1) * r33 - r(1, 3) * r(3, 1)) / r33 * dx
        + (r(1, 2) * r33 - r(1, 3) * r(3, 2)) / r33 * dy
        + px
        - r(1, 3) / r33 * pz
    )
    if length is not None and abs(x) > length / 2:
        return ObjectFrameCom(math.copysign(length / 2, x), True, x)
    return ObjectFrameCom(float(x), False, float(x))


def plan_regrasp(rod_pose: Transform, com: ObjectFrameCom, grip_force: float) -> GraspPose:
    """Grasp at the estimated CoM of a rod lying on the table.

    ``rod_pose`` gives the rod center and its +x direction in the same sense as
    the object frame the estimate was expressed in.
    """
    if com.out_of_range:
        log.warning("estimated CoM %.4f m lies past the rod end; grasping at the end", com.raw)
    axis = rod_pose.R[:, 0]
    p = rod_pose.t + com.x_com_obj * axis
    heading = math.atan2(axis[1], axis[0])
    return GraspPose(p[0], p[1], p[2], heading - math.pi / 2, grip_force)
