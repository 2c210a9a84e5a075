"""Rigid transforms stored as rotation matrix + translation."""

from __future__ import annotations

import math

import numpy as np

ORTHO_TOL = 1e-6


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rotation matrix about a unit ``axis`` (Rodrigues)."""
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    C = 1.0 - c
    return np.array(
        [
            [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
            [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
            [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
        ]
    )


def rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Fixed-axis roll/pitch/yaw, i.e. Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def orthonormality_error(R: np.ndarray) -> float:
    return float(max(np.abs(R.T @ R - np.eye(3)).max(), abs(np.linalg.det(R) - 1.0)))


class Transform:
    """Rigid transform ``p_parent = R @ p_child + t``."""

    __slots__ = ("R", "t")

    def __init__(self, R=None, t=None):
        self.R = np.eye(3) if R is None else np.asarray(R, dtype=float)
        self.t = np.zeros(3) if t is None else np.asarray(t, dtype=float)
        if self.R.shape != (3, 3) or self.t.shape != (3,):
            raise ValueError("Transform needs a 3x3 rotation and a 3-vector")

    @classmethod
    def from_xyz_rpy(cls, xyz=(0.0, 0.0, 0.0), rpy_angles=(0.0, 0.0, 0.0)) -> "Transform":
        return cls(rpy(*rpy_angles), np.asarray(xyz, dtype=float))

    @classmethod
    def from_matrix(cls, M) -> "Transform":
        M = np.asarray(M, dtype=float)
        return cls(M[:3, :3].copy(), M[:3, 3].copy())

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.R
        M[:3, 3] = self.t
        return M

    def __matmul__(self, other: "Transform") -> "Transform":
        return Transform(self.R @ other.R, self.R @ other.t + self.t)

    def inverse(self) -> "Transform":
        Rt = self.R.T
        return Transform(Rt, -Rt @ self.t)

    def apply(self, points) -> np.ndarray:
        """Map point(s) of shape (3,) or (N, 3) from child to parent frame."""
        points = np.asarray(points, dtype=float)
        return points @ self.R.T + self.t

    def check(self, tol: float = ORTHO_TOL) -> "Transform":
        err = orthonormality_error(self.R)
        if err > tol:
            raise ValueError(f"rotation drifted from SO(3) by {err:.3e}")
        return self

    def __repr__(self):
        return f"Transform(R={self.R.tolist()}, t={self.t.tolist()})"
