"""Synthetic joint-torque snapshots before and after grasping.

Sign convention: a snapshot stores the actuator torque that holds the arm
still, so before grasping ``tau = -self_gravity_torques``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .kinematics import KinematicChain, lever_arms, self_gravity_torques

BEFORE = "before_grasp"
AFTER = "after_grasp"
GRAVITY_DIR = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True)
class TorqueSnapshot:
    tau: np.ndarray
    phase: str
    q: np.ndarray

    def __post_init__(self):
        if self.phase not in (BEFORE, AFTER):
            raise InvalidInput(f"unknown phase {self.phase!r}")
        tau = np.asarray(self.tau, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if tau.shape != q.shape or tau.ndim != 1:
            raise InvalidInput("tau and q must be equal-length vectors")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class PayloadTruth:
    delta_r: np.ndarray  # eelink frame, eelink origin -> object CoM (m)
    weight: float  # G_o (N), acting along world -z

    def __post_init__(self):
        if not self.weight >= 0:
            raise InvalidInput("payload weight must be >= 0")
        object.__setattr__(self, "delta_r", np.asarray(self.delta_r, dtype=float))


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    seed: int | None = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise InvalidInput("sigma must be >= 0")

    def draw(self, n: int) -> np.ndarray:
        """One independent draw per joint; identical for identical seeds."""
        if self.sigma == 0:
            return np.zeros(n)
        return np.random.default_rng(self.seed).normal(0.0, self.sigma, n)


def check_pair(before: TorqueSnapshot, after: TorqueSnapshot) -> None:
    if before.phase != BEFORE or after.phase != AFTER:
        raise InvalidInput("expected a (before_grasp, after_grasp) pair")
    if before.q.shape != after.q.shape or not np.array_equal(before.q, after.q):
        raise InvalidInput("before and after snapshots must share the arm state")


def payload_torque(chain: KinematicChain, q, truth: PayloadTruth) -> np.ndarray:
    """Change of holding torque caused by the payload: G_o * axis_i·((r_i + Δr) × e_z)."""
    arms = lever_arms(chain, q)
    dr_world = arms.eelink_rotation @ truth.delta_r
    weight_vec = truth.weight * GRAVITY_DIR
    return -np.einsum("ij,ij->i", arms.axes, np.cross(arms.r_ee + dr_world, weight_vec))


def capture_before(chain: KinematicChain, q, noise: NoiseSpec = NoiseSpec(), g=None) -> TorqueSnapshot:
    kwargs = {} if g is None else {"g": g}
    tau = -self_gravity_torques(chain, q, **kwargs)
    return TorqueSnapshot(tau + noise.draw(chain.n), BEFORE, np.array(q, dtype=float))


def capture_after(
    chain: KinematicChain, q, truth: PayloadTruth, noise: NoiseSpec = NoiseSpec(), g=None
) -> TorqueSnapshot:
    """After-grasp holding torque. Use a different noise seed than the before capture."""
    kwargs = {} if g is None else {"g": g}
    tau = -self_gravity_torques(chain, q, **kwargs) + payload_torque(chain, q, truth)
    return TorqueSnapshot(tau + noise.draw(chain.n), AFTER, np.array(q, dtype=float))


def relative_noise(chain: KinematicChain, q, fraction: float = 0.005, seed=0) -> NoiseSpec:
    """Experiment preset: sigma as a fraction of the largest holding torque at ``q``."""
    tau = self_gravity_torques(chain, q)
    return NoiseSpec(fraction * float(np.abs(tau).max()), seed)
