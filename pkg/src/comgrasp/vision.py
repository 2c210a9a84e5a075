"""Geometry-only stand-in for the RGBD pipelines.

Masks are rendered exactly from the scene (an orthographic view of a capsule
is a 2-D stadium), so segmentation is perfect and only pixel quantization
remains. Both cameras then reduce a mask to its minimal-area rectangle.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import (
    AmbiguousOrientationError,
    EmptyMaskError,
    InvalidInput,
    ObservationUnavailableError,
)
from .scene import SIDE_CAMERA_MOUNT, CameraModel, GraspPose, ObjectTransform, RodObject, normalize_half_turn
from .transforms import Transform, rot_y, rot_z

THETA_SLIP = math.radians(10.0)
SLIP_DISTANCE = 0.005
MAX_OCCLUSION = 0.8
# gripper fingers as seen by the side camera: (x_min, x_max, y_min, y_max) in
# the camera plane, m; the camera rides on the eelink so these never move
FINGER_BOXES = ((-0.01, 0.01, -0.004, 0.12),)
_PGM_HEADER = re.compile(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s")


@dataclass(frozen=True)
class OccupancyMask:
    """Boolean image; ``grid[row, col]``, row along camera y, col along camera x."""

    grid: np.ndarray
    scale: float
    camera: CameraModel

    @property
    def shape(self):
        return self.grid.shape

    def pixel_to_plane(self, cols, rows):
        H, W = self.grid.shape
        x = (np.asarray(cols, dtype=float) + 0.5 - W / 2) * self.scale
        y = (np.asarray(rows, dtype=float) + 0.5 - H / 2) * self.scale
        return x, y


@dataclass(frozen=True)
class MinAreaRect:
    """Rectangle in the camera plane (m); ``u`` is the major axis, a >= b."""

    center: np.ndarray
    u: np.ndarray
    v: np.ndarray
    half_extents: tuple

    @property
    def area(self) -> float:
        a, b = self.half_extents
        return 4.0 * a * b

    @property
    def angle(self) -> float:
        """Angle of ``u`` to camera +x, in (-pi/2, pi/2]."""
        return normalize_half_turn(math.atan2(self.u[1], self.u[0]))


@dataclass(frozen=True)
class SlipObservation:
    theta: float  # rod axis vs horizontal in the side image, rad
    contact_offset: float  # grasp line position along the rod from its center, m
    slipped: bool
    center_eelink: np.ndarray = None  # rod rectangle center in eelink coordinates

    def __post_init__(self):
        if abs(self.theta) > math.pi / 2:
            raise InvalidInput("tilt must satisfy |theta| <= pi/2")
        c = np.zeros(3) if self.center_eelink is None else np.asarray(self.center_eelink, float)
        object.__setattr__(self, "center_eelink", c)


def _rod_window(rod: RodObject, camera: CameraModel):
    """Rendered capsule restricted to its bounding window: ``(row0, col0, sub)`` or None."""
    W, H = camera.resolution
    s = camera.scale
    to_cam = camera.pose.inverse()
    p0, p1 = (to_cam.apply(p)[:2] for p in rod.endpoints())
    lo = np.minimum(p0, p1) - rod.radius
    hi = np.maximum(p0, p1) + rod.radius
    c0 = max(int(math.floor(lo[0] / s + W / 2 - 0.5)), 0)
    c1 = min(int(math.ceil(hi[0] / s + W / 2 - 0.5)), W - 1)
    r0 = max(int(math.floor(lo[1] / s + H / 2 - 0.5)), 0)
    r1 = min(int(math.ceil(hi[1] / s + H / 2 - 0.5)), H - 1)
    if c0 > c1 or r0 > r1:
        return None
    xs = (np.arange(c0, c1 + 1) + 0.5 - W / 2) * s - p0[0]
    ys = (np.arange(r0, r1 + 1) + 0.5 - H / 2) * s - p0[1]
    X, Y = xs[None, :], ys[:, None]
    d = p1 - p0
    dd = float(d @ d)
    tt = np.clip((X * d[0] + Y * d[1]) / dd, 0.0, 1.0) if dd > 0 else 0.0
    sub = (X - tt * d[0]) ** 2 + (Y - tt * d[1]) ** 2 <= rod.radius**2
    return (r0, c0, sub) if sub.any() else None


def render_mask(objects, camera: CameraModel) -> OccupancyMask:
    """Pixel occupied iff its center's viewing ray hits a rod's capsule."""
    if isinstance(objects, RodObject):
        objects = [objects]
    W, H = camera.resolution
    grid = np.zeros((H, W), dtype=bool)
    for rod in objects:
        win = _rod_window(rod, camera)
        if win is not None:
            r0, c0, sub = win
            grid[r0 : r0 + sub.shape[0], c0 : c0 + sub.shape[1]] |= sub
    if not grid.any():
        raise EmptyMaskError("no object visible in the camera frame")
    return OccupancyMask(grid, camera.scale, camera)


def write_pgm(mask: OccupancyMask, path) -> None:
    """Binary PGM (P5), one byte per pixel, 0 = free, 255 = occupied, row 0 first."""
    H, W = mask.grid.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{W} {H}\n255\n".encode("ascii"))
        fh.write((mask.grid.astype(np.uint8) * 255).tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    m = _PGM_HEADER.match(data)
    if m is None or int(m.group(3)) != 255:
        raise InvalidInput(f"{path}: not an 8-bit binary PGM")
    W, H = int(m.group(1)), int(m.group(2))
    pixels = np.frombuffer(data, dtype=np.uint8, count=W * H, offset=m.end())
    return pixels.reshape(H, W) > 127


def convex_hull(points) -> np.ndarray:
    """Hull vertices, counter-clockwise. Collinear input gives its two extreme points."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts
    try:
        return pts[ConvexHull(pts).vertices]
    except QhullError:
        d = pts - pts[0]
        t = d @ d[np.argmax(np.einsum("ij,ij->i", d, d))]
        return pts[[int(t.argmin()), int(t.argmax())]]


def _boundary_pixels(grid: np.ndarray) -> np.ndarray:
    """Leftmost and rightmost occupied pixel of every row, as (col, row)."""
    rows = np.flatnonzero(grid.any(axis=1))
    sub = grid[rows]
    left = sub.argmax(axis=1)
    right = grid.shape[1] - 1 - sub[:, ::-1].argmax(axis=1)
    return np.concatenate([np.column_stack([left, rows]), np.column_stack([right, rows])])


def _rect_from_frame(points, e):
    n = np.array([-e[1], e[0]])
    pe, pn = points @ e, points @ n
    ext_e = pe.max() - pe.min()
    ext_n = pn.max() - pn.min()
    mid = 0.5 * (pe.max() + pe.min()) * e + 0.5 * (pn.max() + pn.min()) * n
    if ext_n > ext_e:
        e, n, ext_e, ext_n = n, -e, ext_n, ext_e
    return mid, e, n, ext_e, ext_n


def _canonical_axes(u):
    if u[0] < 0 or (u[0] == 0 and u[1] < 0):
        u = -u
    return u, np.array([-u[1], u[0]])


def min_area_rect_points(points) -> MinAreaRect:
    """Minimal-area enclosing rectangle of 2-D points (rotating calipers)."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise InvalidInput("no points")
    hull = convex_hull(points)
    if len(hull) == 1:
        return MinAreaRect(hull[0].copy(), np.array([1.0, 0.0]), np.array([0.0, 1.0]), (0.0, 0.0))
    if len(hull) == 2:
        d = hull[1] - hull[0]
        u, v = _canonical_axes(d / np.linalg.norm(d))
        return MinAreaRect(hull.mean(axis=0), u, v, (0.5 * float(np.linalg.norm(d)), 0.0))

    edges = np.roll(hull, -1, axis=0) - hull
    dirs = edges / np.linalg.norm(edges, axis=1)[:, None]
    normals = np.column_stack([-dirs[:, 1], dirs[:, 0]])
    pe = dirs @ hull.T
    pn = normals @ hull.T
    areas = (pe.max(axis=1) - pe.min(axis=1)) * (pn.max(axis=1) - pn.min(axis=1))
    best = areas.min()
    candidates = np.flatnonzero(areas <= best + 1e-12 * max(best, 1.0))
    chosen = None
    for k in candidates:
        mid, u, v, ext_u, ext_v = _rect_from_frame(hull, dirs[k])
        u, v = _canonical_axes(u)
        key = abs(normalize_half_turn(math.atan2(u[1], u[0])))
        if chosen is None or key < chosen[0] - 1e-15:
            chosen = (key, mid, u, v, ext_u, ext_v)
    _, mid, u, v, ext_u, ext_v = chosen
    return MinAreaRect(mid, u, v, (0.5 * ext_u, 0.5 * ext_v))


def min_area_rect(mask: OccupancyMask) -> MinAreaRect:
    """Minimal-area rectangle around the occupied pixel centers, in camera-plane meters."""
    if not mask.grid.any():
        raise InvalidInput("empty mask")
    return _rect_of_window(mask.grid, 0, 0, mask.grid.shape, mask.scale)


def _rect_of_window(sub, r0, c0, shape, scale) -> MinAreaRect:
    px = _boundary_pixels(sub) + np.array([c0, r0])
    rect = min_area_rect_points(px)  # pixel units
    H, W = shape
    center = (rect.center + 0.5 - np.array([W / 2, H / 2])) * scale
    a, b = rect.half_extents
    return MinAreaRect(center, rect.u, rect.v, (a * scale, b * scale))


def grasp_from_topdown(
    mask: OccupancyMask,
    table_z: float = 0.0,
    radius: float | None = None,
    grip_force: float = 100.0,
) -> GraspPose:
    """Grasp at the rectangle center with the jaws across the major axis.

    ``radius`` defaults to the rectangle half-width plus half a pixel.
    """
    rect = min_area_rect(mask)
    a, b = rect.half_extents
    if a - b <= 0.05 * a:
        raise AmbiguousOrientationError(f"rectangle {2*a:.4f} x {2*b:.4f} m has no clear long axis")
    pose = mask.camera.pose
    c = pose.apply(np.array([rect.center[0], rect.center[1], 0.0]))
    u = pose.R @ np.array([rect.u[0], rect.u[1], 0.0])
    r = b + 0.5 * mask.scale if radius is None else radius
    heading = math.atan2(u[1], u[0])
    return GraspPose(c[0], c[1], table_z + r, normalize_half_turn(heading - math.pi / 2), grip_force)


def topdown_rod_pose(mask: OccupancyMask, table_z: float = 0.0, radius: float | None = None,
                     reference_direction=None) -> Transform:
    """Rod pose on the table from the top-down rectangle.

    The sign of the rod's x axis is ambiguous in the image; it is chosen to
    agree with ``reference_direction`` when given.
    """
    rect = min_area_rect(mask)
    pose = mask.camera.pose
    c = pose.apply(np.array([rect.center[0], rect.center[1], 0.0]))
    u = pose.R @ np.array([rect.u[0], rect.u[1], 0.0])
    if reference_direction is not None and u @ np.asarray(reference_direction) < 0:
        u = -u
    r = rect.half_extents[1] + 0.5 * mask.scale if radius is None else radius
    heading = math.atan2(u[1], u[0])

    return Transform(rot_z(heading), np.array([c[0], c[1], table_z + r]))


def observe_side(
    rod: RodObject,
    camera: CameraModel,
    initial_contact_offset: float | None = None,
    theta_slip: float = THETA_SLIP,
    slip_distance: float = SLIP_DISTANCE,
    occluders=FINGER_BOXES,
) -> SlipObservation:
    """Tilt and grasp position of a lifted rod seen by the eelink-mounted camera.

    ``rod`` carries its current (lifted) world pose. The camera must be the
    side camera riding on the eelink, so that the gripper centerline is the
    image line x = 0. ``contact_offset`` is where that line crosses the rod's
    major axis, measured from the rectangle center along +u (u has a
    non-negative image-x component).
    """
    if camera.kind != "side":
        raise InvalidInput("observe_side needs the side camera")
    win = _rod_window(rod, camera)
    if win is None:
        raise ObservationUnavailableError("rod not in the side view")
    r0, c0, full = win
    total = int(full.sum())
    visible = full.copy()
    W, H = camera.resolution
    h, w = full.shape
    xs = (np.arange(c0, c0 + w) + 0.5 - W / 2) * camera.scale
    ys = (np.arange(r0, r0 + h) + 0.5 - H / 2) * camera.scale
    for x0, x1, y0, y1 in occluders or ():
        cols = np.flatnonzero((xs >= x0) & (xs <= x1))
        rows = np.flatnonzero((ys >= y0) & (ys <= y1))
        if cols.size and rows.size:
            visible[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1] = False
    n_visible = int(visible.sum())
    if 1.0 - n_visible / total > MAX_OCCLUSION:
        raise ObservationUnavailableError(f"{1.0 - n_visible / total:.0%} of the rod is occluded")
    rect = _rect_of_window(visible, r0, c0, (H, W), camera.scale)
    u = rect.u
    if abs(u[0]) < 1e-9:
        raise ObservationUnavailableError("rod is vertical in the side view")
    theta = math.atan2(u[1], u[0])
    offset = -rect.center[0] / u[0]
    slipped = abs(theta) > theta_slip
    if initial_contact_offset is not None:
        slipped = slipped or abs(offset - initial_contact_offset) > slip_distance
    # camera plane (x, y=up) -> eelink (x, ., z=down), on the grasp plane
    center = np.array([rect.center[0], 0.0, -rect.center[1]])
    return SlipObservation(theta, offset, bool(slipped), center)


def eelink_to_object(obs: SlipObservation) -> ObjectTransform:
    """Eelink -> object transform from the side observation.

    The object frame is the eelink frame tilted by ``theta`` about the jaw line
    (eelink y) with its origin moved to the rod center. The observation is
    already in eelink coordinates because the camera is rigidly mounted.
    """
    R = rot_y(obs.theta).T
    p = -R @ obs.center_eelink
    M = ObjectTransform(R, p)
    return M.require_regular()
