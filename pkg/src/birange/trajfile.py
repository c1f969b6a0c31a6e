"""Plain-text trajectory files.

Grammar (UTF-8, LF or CRLF):

* blank lines and lines starting with ``#`` are ignored;
* ``!key value`` directive lines populate the file-level parameter block
  (recognized keys scale the configured motion limits: ``velocity``,
  ``acceleration``, ``deceleration``, ``jerk``); a duplicate key is an error;
* every other line is one waypoint: 8 whitespace-separated numbers in the
  fixed column order moving_az moving_coel static_coel turntable pol_tx
  pol_rx radial_tx radial_rx (deg, deg, deg, deg, deg, deg, m, m).

Every waypoint must satisfy the axis limits at parse time.  All errors
carry the 1-based source line (and column for field errors).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .config import AXES, FacilityConfig
from .geometry import AxisLimitError, MachineState

COLUMNS = AXES  # file column order equals the canonical axis order


class TrajectoryParseError(ValueError):
    def __init__(self, line: int, message: str, column: Optional[int] = None):
        self.line = line
        self.column = column
        at = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{at}: {message}")


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[MachineState, ...] = ()
    params: dict[str, float] = field(default_factory=dict)
    source_lines: tuple[int, ...] = ()  # 1-based line of each waypoint

    def __len__(self) -> int:
        return len(self.waypoints)


def parse(text: str, cfg: Optional[FacilityConfig] = None) -> Trajectory:
    cfg = cfg or FacilityConfig()
    waypoints: list[MachineState] = []
    lines_map: list[int] = []
    params: dict[str, float] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("!"):
            parts = line[1:].split(None, 1)
            if len(parts) != 2:
                raise TrajectoryParseError(lineno, f"malformed directive {line!r}")
            key = parts[0]
            if key in params:
                raise TrajectoryParseError(lineno, f"duplicate directive {key!r}")
            try:
                params[key] = float(parts[1])
            except ValueError:
                raise TrajectoryParseError(
                    lineno, f"non-numeric directive value {parts[1]!r}"
                ) from None
            continue
        fields = line.split()
        if len(fields) != len(COLUMNS):
            raise TrajectoryParseError(
                lineno, f"expected {len(COLUMNS)} columns, got {len(fields)}"
            )
        values = {}
        for col, (axis, fld) in enumerate(zip(COLUMNS, fields), start=1):
            try:
                values[axis] = float(fld)
            except ValueError:
                raise TrajectoryParseError(
                    lineno, f"non-numeric value {fld!r} for {axis}", column=col
                ) from None
        state = MachineState(**values)
        try:
            state.validate(cfg)
        except AxisLimitError as e:
            raise TrajectoryParseError(
                lineno, str(e), column=COLUMNS.index(e.axis) + 1
            ) from None
        waypoints.append(state)
        lines_map.append(lineno)

    return Trajectory(tuple(waypoints), params, tuple(lines_map))


def serialize(traj: Trajectory) -> str:
    """Render a trajectory so that ``parse(serialize(t))`` reproduces it."""
    out = ["# trajectory: " + " ".join(COLUMNS)]
    for key, value in traj.params.items():
        out.append(f"!{key} {value!r}")
    for w in traj.waypoints:
        out.append(" ".join(repr(float(getattr(w, a))) for a in COLUMNS))
    return "\n".join(out) + "\n"


def load(path, cfg: Optional[FacilityConfig] = None) -> Trajectory:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read(), cfg)


def save(traj: Trajectory, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(traj))
