"""Serial-chain forward kinematics for revolute arms.

Joint ``i`` frame in world is ``frame[i-1] @ parent_transform[i] @ Rot(axis[i], q[i])``;
the joint origin is the frame origin and ``link_com`` is expressed in that rotated frame.
The eelink frame is the last joint frame composed with ``eelink_offset``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import InvalidInput
from .transforms import Transform, axis_angle

DEFAULT_GRAVITY = np.array([0.0, 0.0, -9.81])


@dataclass(frozen=True)
class JointSpec:
    parent_transform: Transform
    axis: np.ndarray
    link_mass: float = 0.0
    link_com: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise InvalidInput(f"joint axis must be a unit 3-vector, got {axis}")
        if self.link_mass < 0:
            raise InvalidInput("link_mass must be >= 0")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "link_com", np.asarray(self.link_com, dtype=float))
        self.parent_transform.check()


@dataclass(frozen=True)
class KinematicChain:
    joints: tuple
    eelink_offset: Transform = field(default_factory=Transform)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if not self.joints:
            raise InvalidInput("chain needs at least one joint")
        self.eelink_offset.check()

    @property
    def n(self) -> int:
        return len(self.joints)

    def subchain(self, start: int, stop: int | None = None) -> "KinematicChain":
        """Joints ``start:stop``; the eelink offset is kept only for a tail subchain."""
        stop = self.n if stop is None else stop
        offset = self.eelink_offset if stop == self.n else Transform()
        return KinematicChain(self.joints[start:stop], offset)


@dataclass(frozen=True)
class FrameSet:
    joint_frames: tuple
    eelink_frame: Transform


@dataclass(frozen=True)
class LeverArms:
    """World-frame joint axes, joint->eelink vectors and the eelink rotation."""

    axes: np.ndarray  # (n, 3)
    r_ee: np.ndarray  # (n, 3)
    eelink_rotation: np.ndarray  # (3, 3)

    def __iter__(self):
        return iter(zip(self.axes, self.r_ee))

    def __len__(self):
        return len(self.axes)


def _as_state(chain: KinematicChain, q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != chain.n:
        raise InvalidInput(f"state has {q.shape[0]} angles, chain has {chain.n} joints")
    return q


def forward_kinematics(chain: KinematicChain, q) -> FrameSet:
    q = _as_state(chain, q)
    R = np.eye(3)
    t = np.zeros(3)
    frames = []
    for joint, qi in zip(chain.joints, q):
        pt = joint.parent_transform
        t = R @ pt.t + t
        R = R @ pt.R @ axis_angle(joint.axis, qi)
        frames.append(Transform(R, t))
    ee = frames[-1] @ chain.eelink_offset
    ee.check()
    return FrameSet(tuple(frames), ee)


def lever_arms(chain: KinematicChain, q, frames: FrameSet | None = None) -> LeverArms:
    frames = forward_kinematics(chain, q) if frames is None else frames
    axes = np.array([f.R @ j.axis for f, j in zip(frames.joint_frames, chain.joints)])
    origins = np.array([f.t for f in frames.joint_frames])
    r_ee = frames.eelink_frame.t - origins
    return LeverArms(axes, r_ee, frames.eelink_frame.R.copy())


def link_com_positions(chain: KinematicChain, q, frames: FrameSet | None = None) -> np.ndarray:
    frames = forward_kinematics(chain, q) if frames is None else frames
    return np.array([f.apply(j.link_com) for f, j in zip(frames.joint_frames, chain.joints)])


def self_gravity_torques(chain: KinematicChain, q, g=DEFAULT_GRAVITY) -> np.ndarray:
    """Axial torque of the arm's own weight about each joint (N·m).

    For joint i this is ``axis_i · Σ_{j>=i} (p_com_j - o_i) × m_j g``.
    """
    g = np.asarray(g, dtype=float)
    frames = forward_kinematics(chain, q)
    coms = link_com_positions(chain, q, frames)
    masses = np.array([j.link_mass for j in chain.joints])
    forces = masses[:, None] * g
    tau = np.empty(chain.n)
    for i, frame in enumerate(frames.joint_frames):
        axis = frame.R @ chain.joints[i].axis
        moment = np.cross(coms[i:] - frame.t, forces[i:]).sum(axis=0)
        tau[i] = axis @ moment
    return tau


def potential_energy(chain: KinematicChain, q, g=DEFAULT_GRAVITY) -> float:
    coms = link_com_positions(chain, q)
    masses = np.array([j.link_mass for j in chain.joints])
    return float(-(masses * (coms @ np.asarray(g, dtype=float))).sum())


def geometric_jacobian(chain: KinematicChain, q) -> np.ndarray:
    """6xn Jacobian [linear; angular] of the eelink origin."""
    arms = lever_arms(chain, q)
    return np.vstack([np.cross(arms.axes, arms.r_ee).T, arms.axes.T])


def inverse_kinematics(
    chain: KinematicChain,
    target: Transform,
    q0,
    tol: float = 1e-10,
    max_iter: int = 200,
    damping: float = 1e-3,
) -> np.ndarray:
    """Damped least-squares IK for a full eelink pose.

    Used only to put the arm at the lift pose above a grasp. Raises
    ``InvalidInput`` when the pose is not reached.
    """
    q = _as_state(chain, q0).copy()
    for _ in range(max_iter):
        fs = forward_kinematics(chain, q)
        ee = fs.eelink_frame
        arms = lever_arms(chain, q, fs)
        w = Rotation.from_matrix(target.R @ ee.R.T).as_rotvec()
        err = np.concatenate([target.t - ee.t, w])
        if np.abs(err).max() < tol:
            return q
        J = np.vstack([np.cross(arms.axes, arms.r_ee).T, arms.axes.T])
        q = q + J.T @ np.linalg.solve(J @ J.T + damping**2 * np.eye(6), err)
    raise InvalidInput("inverse kinematics did not converge")
