"""Trajectory and report serialization.

CSV: header ``t,x,y,regime`` with regime in {int, ext}; floats written with
``repr`` so files round-trip bit-exactly.  JSON documents carry ``schema: 1``.
"""

from __future__ import annotations

import io
import json
from typing import Any, TextIO

from .integrate import HybridTrajectory

SCHEMA = 1

__all__ = ["SCHEMA", "trajectory_csv", "trajectory_json", "dump_json"]


def trajectory_csv(traj: HybridTrajectory, out: TextIO | None = None) -> str:
    buf = out or io.StringIO()
    buf.write("t,x,y,regime\n")
    for t, x, y, reg in traj.rows():
        buf.write(f"{t!r},{x!r},{y!r},{reg}\n")
    return buf.getvalue() if out is None else ""


def trajectory_json(traj: HybridTrajectory, meta: dict[str, Any] | None = None) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "meta": meta or {},
        "arcs": [
            {"regime": a.regime.value, "t": a.t.tolist(), "x": a.x.tolist(), "y": a.y.tolist()}
            for a in traj.arcs
        ],
        "events": [
            {"kind": e.kind.value, "time": e.time, "x": e.point.x, "y": e.point.y,
             "name": e.name, "residual": e.residual}
            for e in traj.events
        ],
    }


def dump_json(doc: dict[str, Any], out: TextIO) -> None:
    json.dump(doc, out, indent=2, sort_keys=False, allow_nan=True)
    out.write("\n")
