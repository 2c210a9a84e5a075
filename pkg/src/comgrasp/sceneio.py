"""Scene file: a versioned YAML document describing arm, cameras, rods and presets.

Every value is checked against a fixed schema. Unknown keys, wrong types and
out-of-range values are reported with the line they occur on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ComGraspError, RecordParseError
from .kinematics import JointSpec, KinematicChain
from .scene import RodObject
from .transforms import Transform

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CameraSettings:
    center: tuple = (0.45, 0.0)
    height: float = 2.0
    resolution: tuple = (512, 512)
    scale: float = 0.002


@dataclass(frozen=True)
class SideCameraSettings:
    resolution: tuple = (1024, 768)
    scale: float = 0.001
    rate: float = 30.0  # frames per second while monitoring a lift


@dataclass(frozen=True)
class SlipSettings:
    mu: float = 0.4
    pad_halfwidth: float = 0.008
    theta_max: float = math.radians(45.0)
    dt: float = 1e-3
    rot_time: float = 0.05
    trans_time: float = 0.05
    duration: float = 1.0
    mu_spread: float = 0.3


@dataclass(frozen=True)
class SceneConfig:
    chain: KinematicChain
    home: np.ndarray
    objects: tuple = ()
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    table_height: float = 0.0
    top_camera: CameraSettings = CameraSettings()
    side_camera: SideCameraSettings = SideCameraSettings()
    workspace_x: tuple = (0.35, 0.55)
    workspace_y: tuple = (-0.15, 0.15)
    lift_height: float = 0.2
    noise_sigma: float | None = None
    noise_relative: float = 0.005
    slip: SlipSettings = SlipSettings()
    grip_force: float = 100.0
    exec_sigma: float = 0.002
    load_factor: float = 1.3
    seed: int = 0


# ---------------------------------------------------------------- YAML with lines


class _Node:
    """A parsed YAML value remembering its source line (1-based)."""

    __slots__ = ("value", "line")

    def __init__(self, value, line):
        self.value = value
        self.line = line


def _convert(node):
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = yaml.safe_load(yaml.serialize(k)) if not isinstance(k, yaml.ScalarNode) else k.value
            if key in out:
                raise _Error(f"duplicate key {key!r}", k.start_mark.line + 1)
            out[key] = (_convert(v), k.start_mark.line + 1)
        return _Node(out, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_convert(v) for v in node.value], line)
    return _Node(yaml.safe_load(yaml.serialize(node)), line)


class _Error(Exception):
    def __init__(self, message, line):
        super().__init__(message)
        self.line = line


class _Reader:
    """Typed accessors over a mapping node that track which keys were consumed."""

    def __init__(self, node: _Node, where: str):
        if not isinstance(node.value, dict):
            raise _Error(f"{where}: expected a mapping", node.line)
        self.node = node
        self.where = where
        self.used = set()

    def has(self, key):
        return key in self.node.value

    def raw(self, key, required=False):
        if key not in self.node.value:
            if required:
                raise _Error(f"{self.where}: missing required key {key!r}", self.node.line)
            return None
        self.used.add(key)
        return self.node.value[key][0]

    def number(self, key, default=None, lo=None, hi=None, positive=False, integer=False):
        n = self.raw(key, required=default is None)
        if n is None:
            return default
        v = n.value
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
            raise _Error(f"{self.where}.{key}: expected {'an integer' if integer else 'a number'}", n.line)
        if positive and not v > 0:
            raise _Error(f"{self.where}.{key}: must be > 0", n.line)
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise _Error(f"{self.where}.{key}: {v} outside [{lo}, {hi}]", n.line)
        return v

    def vector(self, key, size, default=None):
        n = self.raw(key, required=default is None)
        if n is None:
            return default
        if not isinstance(n.value, list) or len(n.value) != size:
            raise _Error(f"{self.where}.{key}: expected a list of {size} numbers", n.line)
        out = []
        for item in n.value:
            if isinstance(item.value, bool) or not isinstance(item.value, (int, float)):
                raise _Error(f"{self.where}.{key}: expected numbers", item.line)
            out.append(float(item.value))
        return tuple(out)

    def string(self, key, default=None):
        n = self.raw(key, required=default is None)
        if n is None:
            return default
        if not isinstance(n.value, str):
            raise _Error(f"{self.where}.{key}: expected a string", n.line)
        return n.value

    def child(self, key, required=False):
        n = self.raw(key, required=required)
        return None if n is None else _Reader(n, f"{self.where}.{key}")

    def finish(self):
        for key, (_, line) in self.node.value.items():
            if key not in self.used:
                raise _Error(f"{self.where}: unknown key {key!r}", line)


def _transform(r: _Reader | None) -> Transform:
    if r is None:
        return Transform()
    xyz = r.vector("xyz", 3, (0.0, 0.0, 0.0))
    rpy = r.vector("rpy", 3, (0.0, 0.0, 0.0))
    r.finish()
    return Transform.from_xyz_rpy(xyz, rpy)


def _chain(r: _Reader):
    joints_node = r.raw("joints", required=True)
    if not isinstance(joints_node.value, list) or not joints_node.value:
        raise _Error("chain.joints: expected a non-empty list", joints_node.line)
    joints = []
    for i, jn in enumerate(joints_node.value, start=1):
        jr = _Reader(jn, f"chain.joints[{i}]")
        parent = _transform(jr.child("parent"))
        axis_n = jr.raw("axis")
        axis = jr.vector("axis", 3, (0.0, 0.0, 1.0))
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise _Error(f"chain.joints[{i}].axis: not a unit vector", axis_n.line if axis_n else jn.line)
        mass = jr.number("mass", 0.0, lo=0.0)
        com = jr.vector("com", 3, (0.0, 0.0, 0.0))
        jr.finish()
        joints.append(JointSpec(parent, np.array(axis), float(mass), np.array(com)))
    eelink = _transform(r.child("eelink"))
    home = r.vector("home", len(joints), tuple([0.0] * len(joints)))
    r.finish()
    return KinematicChain(joints, eelink), np.array(home)


def _objects(node: _Node, table_z: float):
    if not isinstance(node.value, list):
        raise _Error("objects: expected a list", node.line)
    out = []
    for i, on in enumerate(node.value, start=1):
        r = _Reader(on, f"objects[{i}]")
        name = r.string("name", f"obj{i}")
        length = r.number("length", positive=True)
        radius = r.number("radius", positive=True)
        mass = r.number("mass", positive=True)
        com_offset = r.number("com_offset", 0.0)
        com_depth = r.number("com_depth", 0.0, lo=0.0)
        pr = r.child("pose")
        x, y, yaw = 0.45, 0.0, 0.0
        if pr is not None:
            x, y = pr.vector("xy", 2, (x, y))
            yaw = math.radians(pr.number("yaw_deg", 0.0))
            pr.finish()
        r.finish()
        try:
            rod = RodObject(float(length), float(radius), float(mass), float(com_offset),
                            com_depth=float(com_depth), name=name)
        except ComGraspError as exc:
            raise _Error(f"objects[{i}]: {exc}", on.line) from None
        out.append(rod.resting(x, y, yaw, table_z))
    return tuple(out)


def parse_scene(text: str, source: str = "<scene>") -> SceneConfig:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise RecordParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                               mark.line + 1 if mark else None, source) from None
    if root is None:
        raise RecordParseError("empty scene file", 1, source)
    try:
        return _build(_Reader(_convert(root), "scene"))
    except _Error as exc:
        raise RecordParseError(str(exc), exc.line, source) from None


def _build(r: _Reader) -> SceneConfig:
    version = r.number("version", integer=True)
    if version != SCHEMA_VERSION:
        raise _Error(f"unsupported schema version {version} (expected {SCHEMA_VERSION})",
                     r.node.value["version"][1])
    kw = {}
    kw["seed"] = int(r.number("seed", 0, integer=True))
    kw["gravity"] = np.array(r.vector("gravity", 3, (0.0, 0.0, -9.81)))
    kw["table_height"] = float(r.number("table_height", 0.0))
    chain, home = _chain(r.child("chain", required=True))
    kw["chain"], kw["home"] = chain, home

    cams = r.child("cameras")
    if cams is not None:
        top = cams.child("top_down")
        if top is not None:
            kw["top_camera"] = CameraSettings(
                top.vector("center", 2, (0.45, 0.0)),
                float(top.number("height", 2.0, positive=True)),
                tuple(int(v) for v in top.vector("resolution", 2, (512, 512))),
                float(top.number("scale", 0.002, positive=True)),
            )
            top.finish()
        side = cams.child("side")
        if side is not None:
            kw["side_camera"] = SideCameraSettings(
                tuple(int(v) for v in side.vector("resolution", 2, (1024, 768))),
                float(side.number("scale", 0.001, positive=True)),
                float(side.number("rate", 30.0, positive=True)),
            )
            side.finish()
        cams.finish()

    ws = r.child("workspace")
    if ws is not None:
        kw["workspace_x"] = ws.vector("x", 2, (0.35, 0.55))
        kw["workspace_y"] = ws.vector("y", 2, (-0.15, 0.15))
        kw["lift_height"] = float(ws.number("lift_height", 0.2, positive=True))
        ws.finish()

    noise = r.child("noise")
    if noise is not None:
        if noise.has("sigma") and noise.has("relative"):
            raise _Error("noise: give either sigma or relative, not both", noise.node.line)
        if noise.has("sigma"):
            kw["noise_sigma"] = float(noise.number("sigma", lo=0.0))
        kw["noise_relative"] = float(noise.number("relative", 0.005, lo=0.0))
        noise.finish()

    slip = r.child("slip")
    if slip is not None:
        d = SlipSettings()
        kw["slip"] = SlipSettings(
            mu=float(slip.number("mu", d.mu, positive=True)),
            pad_halfwidth=float(slip.number("pad_halfwidth", d.pad_halfwidth, positive=True)),
            theta_max=math.radians(slip.number("theta_max_deg", math.degrees(d.theta_max), lo=0.0, hi=90.0)),
            dt=float(slip.number("dt", d.dt, positive=True)),
            rot_time=float(slip.number("rot_time", d.rot_time, positive=True)),
            trans_time=float(slip.number("trans_time", d.trans_time, positive=True)),
            duration=float(slip.number("duration", d.duration, positive=True)),
            mu_spread=float(slip.number("mu_spread", d.mu_spread, lo=0.0, hi=0.99)),
        )
        slip.finish()

    grasp = r.child("grasp")
    if grasp is not None:
        kw["grip_force"] = float(grasp.number("grip_force", 100.0, positive=True))
        kw["exec_sigma"] = float(grasp.number("exec_sigma", 0.002, lo=0.0))
        grasp.finish()

    transport = r.child("transport")
    if transport is not None:
        kw["load_factor"] = float(transport.number("load_factor", 1.3, lo=1.0))
        transport.finish()

    objects = r.raw("objects")
    if objects is not None:
        if isinstance(objects.value, str):
            if objects.value != "benchmark":
                raise _Error("objects: the only named preset is 'benchmark'", objects.line)
            kw["objects"] = tuple(load_scene(default_scene_path()).objects)
        else:
            kw["objects"] = _objects(objects, kw["table_height"])
    r.finish()
    return SceneConfig(**kw)


def load_scene(path) -> SceneConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise RecordParseError(f"cannot read scene: {exc.strerror}", None, str(path)) from None
    return parse_scene(text, str(path))


def default_scene_path() -> Path:
    return Path(resources.files("comgrasp") / "data" / "benchmark_scene.yaml")

