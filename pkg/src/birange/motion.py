"""Jerk-limited axis motion profiles and trajectory verification.

Per-axis rest-to-rest profiles follow the classic 7-phase S-curve: jerk up
to the acceleration cap, hold, jerk down to zero at peak velocity, cruise,
then the mirrored deceleration ramp (deceleration may differ from
acceleration).  Short moves degenerate naturally: the cruise phase and the
constant-acceleration holds shrink to zero before the jerk phases do.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import AXES, AxisMotionLimits, FacilityConfig
from .collision import CollisionTable, TABLE_AXES, query_table_many
from .geometry import MachineState
from .trajfile import Trajectory

DEFAULT_STEP_OVERHEAD_S = 0.1
COLLISION_SAMPLE_DT_S = 0.001


def _ramp_times(v_pk: float, acc: float, jerk: float) -> tuple[float, float]:
    """(jerk-phase time, constant-acceleration time) to reach v_pk from rest."""
    if v_pk * jerk >= acc * acc:
        return acc / jerk, v_pk / acc - acc / jerk
    return math.sqrt(v_pk / jerk), 0.0


def _rest_to_rest_distance(v_pk: float, lim: AxisMotionLimits) -> float:
    tj1, ta = _ramp_times(v_pk, lim.a_max, lim.j_max)
    tj2, td = _ramp_times(v_pk, lim.d_max, lim.j_max)
    return 0.5 * v_pk * ((2 * tj1 + ta) + (2 * tj2 + td))


@dataclass(frozen=True)
class AxisProfile:
    """Constant-jerk segment sequence for one axis, starting at rest."""

    axis: str
    start: float
    target: float
    segments: tuple[tuple[float, float], ...]  # (duration s, jerk value)
    # knots at segment starts: time, position, velocity, acceleration
    _knots: tuple[tuple[float, float, float, float], ...] = field(repr=False, default=())

    @staticmethod
    def plan(axis: str, start: float, target: float, lim: AxisMotionLimits) -> "AxisProfile":
        dist = abs(target - start)
        if dist == 0.0:
            return AxisProfile(axis, start, target, ())
        sign = 1.0 if target > start else -1.0
        if _rest_to_rest_distance(lim.v_max, lim) <= dist:
            v_pk = lim.v_max
        else:
            lo, hi = 0.0, lim.v_max
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if _rest_to_rest_distance(mid, lim) < dist:
                    lo = mid
                else:
                    hi = mid
            v_pk = 0.5 * (lo + hi)
        t_cruise = max(0.0, (dist - _rest_to_rest_distance(v_pk, lim)) / v_pk)
        tj1, ta = _ramp_times(v_pk, lim.a_max, lim.j_max)
        tj2, td = _ramp_times(v_pk, lim.d_max, lim.j_max)
        j = lim.j_max * sign
        raw = (
            (tj1, j),
            (ta, 0.0),
            (tj1, -j),
            (t_cruise, 0.0),
            (tj2, -j),
            (td, 0.0),
            (tj2, j),
        )
        segments = tuple((dt, jk) for dt, jk in raw if dt > 0.0)
        knots = []
        t = p = v = a = 0.0
        for dt, jk in segments:
            knots.append((t, p, v, a))
            p += v * dt + 0.5 * a * dt * dt + jk * dt**3 / 6.0
            v += a * dt + 0.5 * jk * dt * dt
            a += jk * dt
            t += dt
        return AxisProfile(axis, start, target, segments, tuple(knots))

    @property
    def duration(self) -> float:
        return sum(dt for dt, _ in self.segments)

    def pva(self, t: float) -> tuple[float, float, float]:
        """Position, velocity, acceleration at time t (clamped to the ends)."""
        if not self.segments or t >= self.duration:
            return self.target, 0.0, 0.0
        if t <= 0.0:
            return self.start, 0.0, 0.0
        times = [k[0] for k in self._knots]
        i = bisect_right(times, t) - 1
        t0, p, v, a = self._knots[i]
        jk = self.segments[i][1]
        tau = t - t0
        return (
            self.start + p + v * tau + 0.5 * a * tau * tau + jk * tau**3 / 6.0,
            v + a * tau + 0.5 * jk * tau * tau,
            a + jk * tau,
        )


@dataclass(frozen=True)
class MotionProfile:
    """Simultaneous per-axis profiles between two machine states."""

    start: MachineState
    target: MachineState
    axes: dict[str, AxisProfile]

    @property
    def duration(self) -> float:
        return max((p.duration for p in self.axes.values()), default=0.0)

    def state_at(self, t: float) -> MachineState:
        vals = {a: self.axes[a].pva(t)[0] if a in self.axes else getattr(self.start, a) for a in AXES}
        return MachineState(**vals)

    def velocities_at(self, t: float) -> dict[str, float]:
        return {a: (self.axes[a].pva(t)[1] if a in self.axes else 0.0) for a in AXES}

    def boundary_times(self) -> list[float]:
        out = {0.0, self.duration}
        for p in self.axes.values():
            t = 0.0
            for dt, _ in p.segments:
                t += dt
                out.add(t)
        return sorted(out)


def plan_profile(
    frm: MachineState,
    to: MachineState,
    limits: Optional[dict[str, AxisMotionLimits]] = None,
    cfg: Optional[FacilityConfig] = None,
) -> MotionProfile:
    cfg = cfg or FacilityConfig()
    limits = limits or dict(cfg.motion_limits)
    frm.validate(cfg)
    to.validate(cfg)
    axes = {}
    for a in AXES:
        p0, p1 = getattr(frm, a), getattr(to, a)
        if p0 != p1:
            axes[a] = AxisProfile.plan(a, p0, p1, limits[a])
    return MotionProfile(start=frm, target=to, axes=axes)


def sample_profile(profile: MotionProfile, dt: float):
    """Closed-form samples [(t, state, velocities)], last exactly at target."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    T = profile.duration
    if T == 0.0:
        return [(0.0, profile.target, profile.velocities_at(0.0))]
    ts = list(np.arange(0.0, T, dt))
    samples = [(float(t), profile.state_at(t), profile.velocities_at(t)) for t in ts]
    samples.append((T, profile.target, {a: 0.0 for a in AXES}))
    return samples


@dataclass(frozen=True)
class Violation:
    waypoint_index: int
    time_s: float
    kind: str  # "collision" | "limit"
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    accepted: bool
    mode: str
    n_waypoints: int
    total_duration_s: float
    per_step_overhead_s: float
    detour: dict[str, float]
    first_violation: Optional[Violation] = None

    def to_dict(self) -> dict:
        d = {
            "accepted": self.accepted,
            "mode": self.mode,
            "n_waypoints": self.n_waypoints,
            "total_duration_s": self.total_duration_s,
            "per_step_overhead_s": self.per_step_overhead_s,
            "detour": self.detour,
        }
        if self.first_violation is not None:
            v = self.first_violation
            d["first_violation"] = {
                "waypoint_index": v.waypoint_index,
                "time_s": v.time_s,
                "kind": v.kind,
                "detail": v.detail,
            }
        return d

    def to_text(self) -> str:
        """Structured text report: one ``key: value`` line per field."""
        lines = [
            f"accepted: {str(self.accepted).lower()}",
            f"mode: {self.mode}",
            f"waypoints: {self.n_waypoints}",
            f"total_duration_s: {self.total_duration_s:.6f}",
            f"per_step_overhead_s: {self.per_step_overhead_s:.3f}",
        ]
        for axis, r in self.detour.items():
            lines.append(f"detour.{axis}: {'inf' if math.isinf(r) else f'{r:.6f}'}")
        if self.first_violation is not None:
            v = self.first_violation
            lines += [
                f"violation.kind: {v.kind}",
                f"violation.waypoint_index: {v.waypoint_index}",
                f"violation.time_s: {v.time_s:.6f}",
                f"violation.detail: {v.detail}",
            ]
        return "\n".join(lines) + "\n"


_DIRECTIVE_FIELDS = {
    "velocity": "v_max",
    "acceleration": "a_max",
    "deceleration": "d_max",
    "jerk": "j_max",
}


def _apply_directives(
    limits: dict[str, AxisMotionLimits], params: dict[str, float]
) -> dict[str, AxisMotionLimits]:
    """File-level parameter block: recognized keys scale every axis."""
    import dataclasses

    scales = {}
    for key, field_ in _DIRECTIVE_FIELDS.items():
        if key in params:
            factor = float(params[key])
            if not 0.0 < factor <= 1.0:
                raise ValueError(f"directive {key} must scale in (0, 1], got {factor}")
            scales[field_] = factor
    if not scales:
        return limits
    return {
        axis: dataclasses.replace(
            lim, **{f: getattr(lim, f) * s for f, s in scales.items()}
        )
        for axis, lim in limits.items()
    }


def _detour_metric(waypoints) -> dict[str, float]:
    out = {}
    if len(waypoints) < 2:
        return {a: 1.0 for a in AXES}
    for a in AXES:
        vals = [getattr(w, a) for w in waypoints]
        planned = sum(abs(vals[i + 1] - vals[i]) for i in range(len(vals) - 1))
        minimal = abs(vals[-1] - vals[0])
        if planned == 0.0:
            out[a] = 1.0
        elif minimal == 0.0:
            out[a] = math.inf
        else:
            out[a] = planned / minimal
    return out


def verify_trajectory(
    traj: Trajectory,
    limits: Optional[dict[str, AxisMotionLimits]] = None,
    table: Optional[CollisionTable] = None,
    mode: str = "stepped",
    cfg: Optional[FacilityConfig] = None,
    per_step_overhead_s: float = DEFAULT_STEP_OVERHEAD_S,
    sample_dt_s: float = COLLISION_SAMPLE_DT_S,
) -> VerificationReport:
    """Check a waypoint trajectory against limits and the collision table.

    Every sampled state along every inter-waypoint profile (1 ms grid plus
    all segment boundaries) must pass the conservative table query.  The
    duration sums the profile durations; stepped mode adds the per-step
    command overhead once per waypoint.
    """
    if mode not in ("stepped", "continuous"):
        raise ValueError(f"unknown mode {mode!r}")
    cfg = cfg or FacilityConfig()
    limits = limits or dict(cfg.motion_limits)
    limits = _apply_directives(limits, traj.params)
    wps = list(traj.waypoints)
    overhead = per_step_overhead_s if mode == "stepped" else 0.0
    detour = _detour_metric(wps)

    if not wps:
        return VerificationReport(True, mode, 0, 0.0, per_step_overhead_s, detour)

    def check_states(vals_3, times, wp_index):
        if table is None:
            return None
        hits = query_table_many(table, vals_3)
        if hits.any():
            k = int(np.argmax(hits))
            return Violation(wp_index, float(times[k]), "collision",
                             f"table cell colliding near {vals_3[k].tolist()}")
        return None

    clock = overhead  # arrival command for the first waypoint
    violation = None
    total = 0.0
    for i, w in enumerate(wps):
        try:
            w.validate(cfg)
        except Exception as e:  # limit breach
            violation = Violation(i, clock, "limit", str(e))
            break
        if i == 0:
            v0 = np.array([[getattr(w, a) for a in TABLE_AXES]])
            violation = check_states(v0, [clock], 0)
            if violation:
                break
            continue
        prof = plan_profile(wps[i - 1], w, limits, cfg)
        total += prof.duration
        ts = np.unique(
            np.concatenate(
                [np.arange(0.0, prof.duration, sample_dt_s), np.array(prof.boundary_times())]
            )
        )
        states = np.empty((ts.size, len(TABLE_AXES)))
        for j, a in enumerate(TABLE_AXES):
            if a in prof.axes:
                states[:, j] = [prof.axes[a].pva(float(t))[0] for t in ts]
            else:
                states[:, j] = getattr(w, a)
        violation = check_states(states, clock + ts, i)
        clock += prof.duration + overhead
        if violation:
            break

    duration = total + overhead * len(wps)
    return VerificationReport(
        accepted=violation is None,
        mode=mode,
        n_waypoints=len(wps),
        total_duration_s=duration,
        per_step_overhead_s=per_step_overhead_s,
        detour=detour,
        first_violation=violation,
    )
