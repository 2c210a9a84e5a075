"""Ground-truth world model: rods, grasps, cameras, object transforms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInput, SingularPoseError
from .transforms import Transform, rot_z

GRASP_SPAN = 0.45  # grasps are sampled on the central 90% of the rod


def normalize_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def normalize_half_turn(a: float) -> float:
    """Wrap to (-pi/2, pi/2]; used where a direction is only defined modulo pi."""
    a = math.fmod(a, math.pi)
    if a <= -math.pi / 2:
        a += math.pi
    elif a > math.pi / 2:
        a -= math.pi
    return a


@dataclass(frozen=True)
class RodObject:
    """A thin rod: capsule of ``length`` between cap centers and ``radius``.

    The object frame (``world_pose``) has its origin at the geometric center and
    x along the rod. ``com_offset`` is the CoM position along x; ``com_depth``
    is how far the CoM sits below the axis when the rod rests on the table
    (a resting rod rolls until its off-axis mass is lowest).
    """

    length: float
    radius: float
    mass: float
    com_offset: float = 0.0
    world_pose: Transform = field(default_factory=Transform)
    com_depth: float = 0.0
    name: str = "rod"

    def __post_init__(self):
        if not (self.length > 0 and 0 < self.radius <= self.length / 4):
            raise InvalidInput(f"{self.name}: need 0 < radius <= length/4")
        if not self.mass > 0:
            raise InvalidInput(f"{self.name}: mass must be > 0")
        if abs(self.com_offset) > self.length / 2:
            raise InvalidInput(f"{self.name}: |com_offset| must be <= length/2")
        if not 0 <= self.com_depth <= self.radius:
            raise InvalidInput(f"{self.name}: com_depth must lie in [0, radius]")

    @property
    def weight(self) -> float:
        return self.mass * 9.81

    @property
    def axis(self) -> np.ndarray:
        return self.world_pose.R[:, 0]

    @property
    def center(self) -> np.ndarray:
        return self.world_pose.t

    @property
    def yaw(self) -> float:
        a = self.axis
        return math.atan2(a[1], a[0])

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        h = 0.5 * self.length * self.axis
        return self.center - h, self.center + h

    def com_local(self) -> np.ndarray:
        """CoM in the object frame (z up while resting)."""
        return np.array([self.com_offset, 0.0, -self.com_depth])

    def com_world(self) -> np.ndarray:
        return self.world_pose.apply(self.com_local())

    def resting(self, x: float, y: float, yaw: float, table_z: float = 0.0) -> "RodObject":
        """Copy of the rod lying on the table, centered at (x, y) with axis heading ``yaw``."""
        pose = Transform(rot_z(yaw), np.array([x, y, table_z + self.radius]))
        return replace(self, world_pose=pose)


@dataclass(frozen=True)
class GraspPose:
    """Planar grasp: TCP position, jaw-closing heading ``yaw`` and grip force.

    With the gripper approaching from above, the eelink frame has
    z = world -z, y along the jaw closing direction and x = y × z, which lies
    along the rod for a grasp perpendicular to it.
    """

    x: float
    y: float
    z: float
    yaw: float
    grip_force: float = 100.0

    def __post_init__(self):
        if not self.grip_force > 0:
            raise InvalidInput("grip_force must be > 0")
        object.__setattr__(self, "yaw", normalize_angle(float(self.yaw)))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def eelink_rotation(self) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[-s, c, 0.0], [c, s, 0.0], [0.0, 0.0, -1.0]])

    def eelink_frame(self, lift: float = 0.0) -> Transform:
        return Transform(self.eelink_rotation(), self.position + np.array([0.0, 0.0, lift]))


@dataclass(frozen=True)
class CameraModel:
    """Orthographic camera; the optical axis is the camera frame's z axis.

    Pixel (row, col) centers sit at camera-plane coordinates
    ``((col + 0.5 - W/2) * scale, (row + 0.5 - H/2) * scale)``.
    """

    pose: Transform
    kind: str
    resolution: tuple = (512, 512)  # (width, height)
    scale: float = 0.002

    def __post_init__(self):
        if self.kind not in ("top_down", "side"):
            raise InvalidInput(f"unknown camera kind {self.kind!r}")
        if self.scale <= 0 or min(self.resolution) <= 0:
            raise InvalidInput("camera needs positive resolution and scale")
        object.__setattr__(self, "resolution", tuple(int(v) for v in self.resolution))
        self.pose.check()
        optical = self.pose.R[:, 2]
        tol = math.sin(1e-6)
        if self.kind == "top_down":
            if np.linalg.norm(optical - np.array([0.0, 0.0, -1.0])) > tol:
                raise InvalidInput("top-down camera must look along gravity")
        elif abs(optical[2]) > tol:
            raise InvalidInput("side camera optical axis must be horizontal")

    def with_pose(self, pose: Transform) -> "CameraModel":
        return replace(self, pose=pose)


def top_down_camera(x: float, y: float, height: float = 2.0, resolution=(512, 512), scale=0.002):
    """Camera above (x, y); image x = world x, image y = world -y."""
    R = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
    return CameraModel(Transform(R, np.array([x, y, height])), "top_down", resolution, scale)


# side camera frame relative to eelink: x = eelink x, y = up (-z_E), optical z = eelink y
SIDE_CAMERA_MOUNT = Transform(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]]),
                              np.array([0.0, -0.3, 0.0]))


def side_camera(eelink_frame: Transform, resolution=(1024, 768), scale=0.001) -> CameraModel:
    return CameraModel(eelink_frame @ SIDE_CAMERA_MOUNT, "side", resolution, scale)


class ObjectTransform:
    """Eelink -> object transform ``M``: ``p_object = R @ p_eelink + p``."""

    def __init__(self, R, p):
        self.transform = Transform(R, p).check()

    @classmethod
    def from_matrix(cls, M) -> "ObjectTransform":
        M = np.asarray(M, dtype=float)
        return cls(M[:3, :3], M[:3, 3])

    @property
    def R(self) -> np.ndarray:
        return self.transform.R

    @property
    def p(self) -> np.ndarray:
        return self.transform.t

    def matrix(self) -> np.ndarray:
        return self.transform.matrix()

    def r(self, i: int, j: int) -> float:
        """1-based rotation entry r_ij."""
        return float(self.R[i - 1, j - 1])

    def require_regular(self, tol: float = 1e-6) -> "ObjectTransform":
        if abs(self.R[2, 2]) < tol:
            raise SingularPoseError(f"|r33| = {abs(self.R[2, 2]):.3e} below {tol}")
        return self


def grasp_offset_along_rod(rod: RodObject, grasp: GraspPose) -> float:
    """Signed position of the grasp point along the rod axis, from its center."""
    return float((grasp.position - rod.center) @ rod.axis)


def sample_random_grasp(rod: RodObject, rng_seed, grip_force: float = 100.0) -> GraspPose:
    """Uniform grasp on the central 90% of a resting rod, jaws perpendicular to it.

    The yaw is exactly the rod heading - 90 degrees, so the eelink x axis points
    along the rod's +x.
    """
    if abs(rod.axis[2]) > 1e-9:
        raise InvalidInput("rod must lie flat on the table")
    rng = np.random.default_rng(rng_seed)
    t = rng.uniform(-GRASP_SPAN * rod.length, GRASP_SPAN * rod.length)
    p = rod.center + t * rod.axis
    return GraspPose(p[0], p[1], p[2], rod.yaw - math.pi / 2, grip_force)


def benchmark_objects() -> list[RodObject]:
    """The six canonical benchmark rods from the shipped scene file."""
    from .sceneio import load_scene, default_scene_path

    return list(load_scene(default_scene_path()).objects)
