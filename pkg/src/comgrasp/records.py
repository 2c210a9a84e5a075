"""Text records for torque snapshots and solver results.

Snapshot record (UTF-8, one joint per line, any line order)::

    # comgrasp snapshot v1
    # joint phase q tau
    1 before_grasp 0.1 -3.2
    1 after_grasp 0.1 -4.0
    ...

``joint`` is 1-based, ``phase`` is ``before_grasp`` or ``after_grasp``, ``q``
is the joint angle in rad and ``tau`` the holding torque in N m. Lines
starting with ``#`` after the header and blank lines are ignored. Floats are
written with ``repr`` so a round trip is exact.

Result record: one line of JSON with keys ``delta_r_x``, ``delta_r_y`` (m,
eelink frame), ``weight`` (N), ``residual`` (N^2 m^2) and ``iterations``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import RecordParseError
from .sensing import AFTER, BEFORE, TorqueSnapshot
from .solver import ComEstimate

SNAPSHOT_HEADER = "# comgrasp snapshot v1"


def format_snapshots(before: TorqueSnapshot, after: TorqueSnapshot) -> str:
    lines = [SNAPSHOT_HEADER, "# joint phase q tau"]
    for snap in (before, after):
        for i, (q, tau) in enumerate(zip(snap.q.tolist(), snap.tau.tolist()), start=1):
            lines.append(f"{i} {snap.phase} {q!r} {tau!r}")
    return "\n".join(lines) + "\n"


def write_snapshots(before: TorqueSnapshot, after: TorqueSnapshot, path) -> None:
    Path(path).write_text(format_snapshots(before, after))


def _float(text, line, source):
    try:
        v = float(text)
    except ValueError:
        raise RecordParseError(f"not a number: {text!r}", line, source) from None
    if not math.isfinite(v):
        raise RecordParseError(f"non-finite value {text!r}", line, source)
    return v


def parse_snapshots(text: str, source: str = "<snapshots>") -> tuple[TorqueSnapshot, TorqueSnapshot]:
    lines = text.splitlines()
    first = next((k for k, ln in enumerate(lines) if ln.strip()), None)
    if first is None:
        raise RecordParseError("empty snapshot record", 1, source)
    if lines[first].strip() != SNAPSHOT_HEADER:
        raise RecordParseError(f"expected header {SNAPSHOT_HEADER!r}", first + 1, source)
    rows = {BEFORE: {}, AFTER: {}}
    for k in range(first + 1, len(lines)):
        ln = lines[k].strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 4:
            raise RecordParseError(f"expected 4 fields (joint phase q tau), got {len(parts)}", k + 1, source)
        joint, phase, q, tau = parts
        if not joint.isdigit() or int(joint) < 1:
            raise RecordParseError(f"bad joint index {joint!r}", k + 1, source)
        if phase not in rows:
            raise RecordParseError(f"unknown phase {phase!r}", k + 1, source)
        j = int(joint)
        if j in rows[phase]:
            raise RecordParseError(f"joint {j} {phase} given twice", k + 1, source)
        rows[phase][j] = (_float(q, k + 1, source), _float(tau, k + 1, source), k + 1)

    end = len(lines)
    n = max((max(r) for r in rows.values() if r), default=0)
    if n == 0:
        raise RecordParseError("no joint records", end, source)
    snaps = []
    for phase in (BEFORE, AFTER):
        missing = [j for j in range(1, n + 1) if j not in rows[phase]]
        if missing:
            raise RecordParseError(f"{phase} record missing joint(s) {missing} (truncated file?)", end, source)
        q = np.array([rows[phase][j][0] for j in range(1, n + 1)])
        tau = np.array([rows[phase][j][1] for j in range(1, n + 1)])
        snaps.append(TorqueSnapshot(tau, phase, q))
    before, after = snaps
    if not np.array_equal(before.q, after.q):
        j = int(np.flatnonzero(before.q != after.q)[0]) + 1
        raise RecordParseError(f"joint {j}: before and after q differ", rows[AFTER][j][2], source)
    return before, after


def read_snapshots(path) -> tuple[TorqueSnapshot, TorqueSnapshot]:
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise RecordParseError(f"cannot read snapshot record: {exc}", None, str(path)) from None
    return parse_snapshots(text, str(path))


def result_record(est: ComEstimate) -> str:
    return json.dumps(
        {
            "delta_r_x": est.delta_r_x,
            "delta_r_y": est.delta_r_y,
            "weight": est.weight,
            "residual": est.residual,
            "iterations": est.iterations,
        }
    )


def parse_result(text: str) -> ComEstimate:
    d = json.loads(text)
    return ComEstimate(np.array([d["delta_r_x"], d["delta_r_y"]]), d["weight"], d["residual"], d["iterations"])
