"""Independent oracles and random generators shared by the tests.

The oracles avoid the package's own code paths: they use plain loops, the
textbook formulas or brute force.
"""

import math

import numpy as np

from comgrasp.errors import EmptyMaskError
from comgrasp.kinematics import JointSpec, KinematicChain
from comgrasp.scene import RodObject, top_down_camera
from comgrasp.transforms import Transform
from comgrasp.vision import render_mask

# ------------------------------------------------------------------ generators


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_chain(rng, n=6, massless=False):
    joints = []
    for _ in range(n):
        parent = Transform(random_rotation(rng), rng.uniform(-0.3, 0.3, 3))
        mass = 0.0 if massless else rng.uniform(0.1, 3.0)
        joints.append(JointSpec(parent, random_unit(rng), mass, rng.uniform(-0.2, 0.2, 3)))
    tool = Transform(random_rotation(rng), rng.uniform(-0.2, 0.2, 3))
    return KinematicChain(joints, tool)


def random_instance(rng, n=6):
    """(chain, q, delta_r in eelink frame, weight)."""
    chain = random_chain(rng, n)
    q = rng.uniform(-math.pi, math.pi, n)
    dr = rng.uniform(-0.15, 0.15, 3)
    G = rng.uniform(1.0, 50.0)
    return chain, q, dr, G


def ur5_dh_chain():
    """UR5 geometry in DH form: (d, a, alpha) per joint."""
    d = [0.089159, 0.0, 0.0, 0.10915, 0.09465, 0.0823]
    a = [0.0, -0.425, -0.39225, 0.0, 0.0, 0.0]
    alpha = [math.pi / 2, 0.0, 0.0, math.pi / 2, -math.pi / 2, 0.0]
    return d, a, alpha


# --------------------------------------------------------------------- oracles


def dh_forward(q, d, a, alpha, tool_z=0.0):
    """Textbook DH product T = prod Rz(q) Tz(d) Tx(a) Rx(alpha), then Tz(tool_z)."""
    T = np.eye(4)
    for qi, di, ai, al in zip(q, d, a, alpha):
        ct, st, ca, sa = math.cos(qi), math.sin(qi), math.cos(al), math.sin(al)
        A = np.array(
            [
                [ct, -st * ca, st * sa, ai * ct],
                [st, ct * ca, -ct * sa, ai * st],
                [0.0, sa, ca, di],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
        T = T @ A
    tool = np.eye(4)
    tool[2, 3] = tool_z
    return T @ tool


def balance_residuals(before_tau, after_tau, axes, r_ee, R_ee, dx, dy, G):
    """Per-joint a_i . ((r_i + R (dx, dy, 0)) x (0, 0, -G)) + (T_after - T_before)."""
    out = []
    g = np.array([0.0, 0.0, -G])
    for i in range(len(axes)):
        p = r_ee[i] + R_ee @ np.array([dx, dy, 0.0])
        moment = np.array(
            [p[1] * g[2] - p[2] * g[1], p[2] * g[0] - p[0] * g[2], p[0] * g[1] - p[1] * g[0]]
        )
        out.append(float(axes[i] @ moment) + (after_tau[i] - before_tau[i]))
    return np.array(out)


def balance_objective(*args):
    e = balance_residuals(*args)
    return float(sum(v * v for v in e))


def payload_torque_oracle(axes, r_ee, R_ee, dr, G):
    """Holding-torque change from a point weight at eelink offset ``dr``."""
    out = []
    for i in range(len(axes)):
        p = r_ee[i] + R_ee @ dr
        # moment of the weight about joint i, projected on the axis; holding torque cancels it
        out.append(-float(np.dot(axes[i], np.cross(p, [0.0, 0.0, -G]))))
    return np.array(out)


def elimination_x(M4, dx, dy):
    """Object-frame x of the eelink point (dx, dy, dz*) with dz* chosen so the object z is 0."""
    r = M4[:3, :3]
    p = M4[:3, 3]
    dz = -(r[2, 0] * dx + r[2, 1] * dy + p[2]) / r[2, 2]
    v = M4 @ np.array([dx, dy, dz, 1.0])
    assert abs(v[2]) < 1e-9
    return float(v[0])


def brute_force_min_area(points, n_angles=3600):
    """Smallest bounding-box area over ``n_angles`` orientations in [0, pi/2)."""
    pts = np.asarray(points, dtype=float)
    a = (math.pi / 2) * np.arange(n_angles) / n_angles
    c, s = np.cos(a)[:, None], np.sin(a)[:, None]
    u = c * pts[:, 0] + s * pts[:, 1]
    v = -s * pts[:, 0] + c * pts[:, 1]
    return float(((u.max(axis=1) - u.min(axis=1)) * (v.max(axis=1) - v.min(axis=1))).min())


def central_difference(f, x, h=1e-7):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def random_transform(rng):
    return Transform(random_rotation(rng), rng.uniform(-0.5, 0.5, 3))


def hausdorff_pixels(a, b):
    """Symmetric Hausdorff distance between the occupied pixels of two boolean grids."""
    pa = np.argwhere(a).astype(float)
    pb = np.argwhere(b).astype(float)

    def directed(x, y):
        worst = 0.0
        for chunk in np.array_split(x, max(1, len(x) // 2000)):
            d = np.sqrt(((chunk[:, None, :] - y[None, :, :]) ** 2).sum(-1)).min(axis=1)
            worst = max(worst, float(d.max()))
        return worst

    return max(directed(pa, pb), directed(pb, pa))



def random_mask(rng, size=64):
    """Boolean grid: sparse noise, one or two rendered rods, or a few scattered pixels."""
    kind = rng.integers(3)
    if kind == 0:
        grid = rng.random((size, size)) < rng.uniform(0.001, 0.05)
    elif kind == 1:
        cam = top_down_camera(0.0, 0.0, 2.0, (size, size), 0.002)
        rods = [RodObject(rng.uniform(0.02, 0.1), rng.uniform(0.002, 0.005), 1.0)
                .resting(*rng.uniform(-0.04, 0.04, 2), rng.uniform(-math.pi, math.pi))
                for _ in range(rng.integers(1, 3))]
        try:
            grid = render_mask(rods, cam).grid
        except EmptyMaskError:
            grid = np.zeros((size, size), bool)
    else:
        grid = np.zeros((size, size), bool)
        pts = rng.integers(0, size, (rng.integers(1, 12), 2))
        grid[pts[:, 0], pts[:, 1]] = True
    if not grid.any():
        grid[size // 2, size // 2] = True
    return grid
