"""Kinematics of the two spherical gantry positioners.

Machine model
-------------
Each gantry boom pivots about a horizontal axis through the focal point.
The pedestal (pivot) sits at azimuth ``alpha`` in the focal plane; the
probe at the boom tip sweeps a vertical great circle whose azimuth is
``alpha + sign*90`` for positive co-elevation and the antipode for
negative co-elevation.  Because the sweep is a single rigid rotation, the
probe is never rolled about its boresight except for the apparent 180 deg
polarization inversion when the boom passes the zenith.

Conventions (fixed here, the machine itself does not define a frame):

* hall frame: origin at focal point, x toward static probe azimuth 0, z up;
* co-elevation measured down from the zenith, 0 = zenith;
* polarization 0 deg is theta-polarized at the equator (E field along the
  meridian tangent); positive roll rotates the E reference from the
  meridian tangent toward the azimuthal tangent;
* a turntable rotation of +a subtracts a from both probe azimuths in the
  frame of the device under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .config import AXES, FacilityConfig


class AxisLimitError(ValueError):
    """A machine axis value violates its configured range."""

    def __init__(self, axis: str, value: float, lim: tuple[float, float]):
        self.axis = axis
        self.value = value
        self.lim = lim
        super().__init__(f"{axis} = {value} outside [{lim[0]}, {lim[1]}]")


class ReachabilityError(ValueError):
    """A requested bistatic constellation is outside the reachable set."""


def wrap360(x: float) -> float:
    return float(x) % 360.0


def wrap180(x: float) -> float:
    """Wrap to [-180, 180)."""
    return (float(x) + 180.0) % 360.0 - 180.0


def ang_diff(a: float, b: float) -> float:
    """Signed smallest difference a-b on the circle, in (-180, 180]."""
    return -wrap180(b - a)


@dataclass(frozen=True)
class MachineState:
    """The eight machine axes (deg and m)."""

    moving_az: float = 0.0
    moving_coel: float = 0.0
    static_coel: float = 0.0
    turntable: float = 0.0
    pol_tx: float = 0.0
    pol_rx: float = 0.0
    radial_tx: float = 3.44
    radial_rx: float = 3.44

    def as_dict(self) -> dict[str, float]:
        return {a: float(getattr(self, a)) for a in AXES}

    @classmethod
    def from_dict(cls, d) -> "MachineState":
        return cls(**{a: float(d[a]) for a in AXES})

    def validate(self, cfg: FacilityConfig) -> None:
        for axis in AXES:
            lim = cfg.limit(axis)
            if lim is None:
                continue
            v = getattr(self, axis)
            if not (lim[0] - 1e-9 <= v <= lim[1] + 1e-9):
                raise AxisLimitError(axis, v, lim)


@dataclass(frozen=True)
class BistaticConstellation:
    """Illumination/observation geometry in the DUT frame (deg, m)."""

    phi_ill: float
    theta_ill: float
    phi_obs: float
    theta_obs: float
    pol_ill: float = 0.0
    pol_obs: float = 0.0
    r_ill: float = 3.44
    r_obs: float = 3.44

    def normalized(self) -> "BistaticConstellation":
        return replace(
            self,
            phi_ill=wrap360(self.phi_ill),
            phi_obs=wrap360(self.phi_obs),
            pol_ill=wrap360(self.pol_ill),
            pol_obs=wrap360(self.pol_obs),
        )

    @property
    def bistatic_angle(self) -> float:
        """Angle at the target between the two probe directions, deg."""
        a = direction(self.theta_ill, self.phi_ill)
        b = direction(self.theta_obs, self.phi_obs)
        return math.degrees(math.acos(max(-1.0, min(1.0, float(np.dot(a, b))))))


@dataclass(frozen=True)
class ProbePose:
    position: np.ndarray
    boresight: np.ndarray
    # (co-pol E direction for the set roll angle, cross direction)
    polarization_basis: tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class MappingPolicy:
    """Disambiguation policy for the bistatic -> machine mapping.

    The mapping is not unique (turntable vs moving-gantry azimuth split and
    the two zenith-crossing branches).  The default picks the candidate with
    the least total weighted axis travel from ``current``, ties broken by
    preferring turntable motion over gantry motion.
    """

    current: MachineState = field(default_factory=MachineState)
    weights: dict[str, float] = field(default_factory=dict)

    def weight(self, axis: str) -> float:
        return float(self.weights.get(axis, 1.0))


def direction(theta_deg: float, phi_deg: float) -> np.ndarray:
    th = math.radians(theta_deg)
    ph = math.radians(phi_deg)
    return np.array(
        [math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]
    )


def _gantry_pose(
    pedestal_az: float, coel: float, sign: int, roll: float, radial: float
) -> ProbePose:
    """Pose of one probe from its gantry axes (hall frame)."""
    phi_eff = pedestal_az + 90.0 * sign
    th = math.radians(coel)
    ph = math.radians(phi_eff)
    d = np.array([math.cos(ph), math.sin(ph), 0.0])  # sweep-plane horizontal
    z = np.array([0.0, 0.0, 1.0])
    p_hat = math.sin(th) * d + math.cos(th) * z
    pos = radial * p_hat
    bor = -p_hat
    # transported polarization reference: w follows the meridian tangent
    # (equals theta-hat for coel > 0 and -theta-hat for coel < 0), q is the
    # boom rotation axis direction.
    w = math.cos(th) * d - math.sin(th) * z
    q = np.array([-math.sin(ph), math.cos(ph), 0.0])
    rr = math.radians(roll)
    e_co = math.cos(rr) * w + math.sin(rr) * q
    e_cx = np.cross(bor, e_co)
    return ProbePose(position=pos, boresight=bor, polarization_basis=(e_co, e_cx))


def forward_kinematics(
    state: MachineState, cfg: FacilityConfig
) -> tuple[ProbePose, ProbePose]:
    """Hall-frame poses of the tx (moving gantry) and rx (static) probes."""
    state.validate(cfg)
    off = cfg.offset
    tx = _gantry_pose(
        state.moving_az + off("moving_az"),
        state.moving_coel + off("moving_coel"),
        cfg.tx_boom_offset_sign,
        state.pol_tx + off("pol_tx"),
        state.radial_tx + off("radial_tx"),
    )
    rx = _gantry_pose(
        cfg.static_pedestal_azimuth,
        state.static_coel + off("static_coel"),
        cfg.rx_boom_offset_sign,
        state.pol_rx + off("pol_rx"),
        state.radial_rx + off("radial_rx"),
    )
    return tx, rx


def _effective_probe_azimuth(pedestal_az: float, coel: float, sign: int) -> float:
    phi = pedestal_az + 90.0 * sign
    return phi + 180.0 if coel < 0 else phi


def machine_to_bistatic(state: MachineState, cfg: FacilityConfig) -> BistaticConstellation:
    """DUT-frame constellation for a machine state.

    Pure angle arithmetic (no trig) so that the round trip with
    :func:`bistatic_to_machine` is exact to floating-point resolution.
    """
    state.validate(cfg)
    off = cfg.offset
    m_coel = state.moving_coel + off("moving_coel")
    s_coel = state.static_coel + off("static_coel")
    tt = state.turntable + off("turntable")

    phi_tx = _effective_probe_azimuth(
        state.moving_az + off("moving_az"), m_coel, cfg.tx_boom_offset_sign
    )
    phi_rx = _effective_probe_azimuth(
        cfg.static_pedestal_azimuth, s_coel, cfg.rx_boom_offset_sign
    )
    flip_tx = 180.0 if m_coel < 0 else 0.0
    flip_rx = 180.0 if s_coel < 0 else 0.0
    return BistaticConstellation(
        phi_ill=wrap360(phi_tx - tt),
        theta_ill=abs(m_coel),
        phi_obs=wrap360(phi_rx - tt),
        theta_obs=abs(s_coel),
        pol_ill=wrap360(state.pol_tx + off("pol_tx") + flip_tx),
        pol_obs=wrap360(state.pol_rx + off("pol_rx") + flip_rx),
        r_ill=state.radial_tx + off("radial_tx"),
        r_obs=state.radial_rx + off("radial_rx"),
    )


def _pol_machine(pol_eff: float, flipped: bool, lim: tuple[float, float]) -> Optional[float]:
    """Roll-axis value realizing an effective polarization angle, or None."""
    want = wrap360(pol_eff - (180.0 if flipped else 0.0))
    for cand in (want, want - 360.0, want + 360.0):
        if lim[0] - 1e-9 <= cand <= lim[1] + 1e-9:
            return cand
    return None


def _in_range(v: float, lim: tuple[float, float]) -> bool:
    return lim[0] - 1e-9 <= v <= lim[1] + 1e-9


def bistatic_to_machine(
    target: BistaticConstellation,
    policy: Optional[MappingPolicy] = None,
    cfg: Optional[FacilityConfig] = None,
) -> MachineState:
    """Machine state realizing a DUT-frame constellation.

    Enumerates the discrete solution branches (static and moving
    zenith-crossing signs, plus the free turntable angle when the static
    probe is at the zenith) and returns the policy's minimum-cost candidate.
    Raises :class:`ReachabilityError` when no branch satisfies all limits.
    """
    cfg = cfg or FacilityConfig()
    policy = policy or MappingPolicy()
    cur = policy.current
    off = cfg.offset

    t = target.normalized()
    lim_mc = cfg.limit("moving_coel")
    lim_sc = cfg.limit("static_coel")
    lim_az = cfg.limit("moving_az")
    lim_ptx = cfg.limit("pol_tx")
    lim_prx = cfg.limit("pol_rx")

    if t.theta_ill < 0 or t.theta_ill > lim_mc[1] - off("moving_coel"):
        raise ReachabilityError(
            f"theta_ill = {t.theta_ill} outside reachable [0, {lim_mc[1]}]"
        )
    if t.theta_obs < 0 or t.theta_obs > lim_sc[1] - off("static_coel"):
        raise ReachabilityError(
            f"theta_obs = {t.theta_obs} outside reachable [0, {lim_sc[1]}]"
        )
    for name, val, axis in (
        ("r_ill", t.r_ill, "radial_tx"),
        ("r_obs", t.r_obs, "radial_rx"),
    ):
        machine_val = val - off(axis)
        if not _in_range(machine_val, cfg.limit(axis)):
            raise ReachabilityError(
                f"{name} = {val} outside radial range {cfg.limit(axis)}"
            )

    phi_rx_zero = cfg.static_pedestal_azimuth + 90.0 * cfg.rx_boom_offset_sign  # = 0
    candidates: list[MachineState] = []
    pol_fail: list[str] = []

    static_branches = [1] if t.theta_obs == 0 else [1, -1]
    for s_static in static_branches:
        s_coel_eff = s_static * t.theta_obs
        phi_rx_hall = phi_rx_zero + (180.0 if s_coel_eff < 0 else 0.0)
        if t.theta_obs == 0:
            # turntable free: try staying put, matching the moving azimuth,
            # and the moving-azimuth range ends.
            tt_cands = []
            tt_now = cur.turntable + off("turntable")
            tt_cands.append(tt_now)
            for s_moving in (1, -1):
                want_az = (
                    t.phi_ill
                    - 90.0 * cfg.tx_boom_offset_sign
                    - (180.0 if s_moving < 0 else 0.0)
                )
                # tt such that moving_az lands on current / range ends
                for az_target in (
                    cur.moving_az + off("moving_az"),
                    lim_az[0] + off("moving_az"),
                    lim_az[1] + off("moving_az"),
                ):
                    tt_cands.append(az_target - want_az)
            tts = [wrap360(v) for v in tt_cands]
        else:
            tts = [wrap360(phi_rx_hall - t.phi_obs)]

        for tt_eff in tts:
            for s_moving in [1] if t.theta_ill == 0 else [1, -1]:
                m_coel_eff = s_moving * t.theta_ill
                pol_tx = _pol_machine(t.pol_ill - off("pol_tx"), m_coel_eff < 0, lim_ptx)
                pol_rx = _pol_machine(t.pol_obs - off("pol_rx"), s_coel_eff < 0, lim_prx)
                if pol_tx is None or pol_rx is None:
                    pol_fail.append(
                        f"pol branch (moving {s_moving:+d}, static {s_static:+d})"
                    )
                    continue

                if t.theta_ill == 0:
                    # moving azimuth free at the zenith
                    az_eff = cur.moving_az + off("moving_az")
                    az_eff = min(max(az_eff, lim_az[0] + off("moving_az")), lim_az[1] + off("moving_az"))
                    az_choices = [az_eff]
                else:
                    want = (
                        t.phi_ill
                        + tt_eff
                        - 90.0 * cfg.tx_boom_offset_sign
                        - (180.0 if m_coel_eff < 0 else 0.0)
                    )
                    az_choices = [
                        v
                        for v in (
                            wrap180(want),
                            wrap180(want) + 360.0,
                            wrap180(want) - 360.0,
                        )
                        if _in_range(v - off("moving_az"), lim_az)
                    ]
                for az_eff in az_choices:
                    # turntable machine value: representative nearest current
                    tt_machine = cur.turntable + ang_diff(
                        tt_eff, wrap360(cur.turntable + off("turntable"))
                    ) - 0.0
                    state = MachineState(
                        moving_az=az_eff - off("moving_az"),
                        moving_coel=m_coel_eff - off("moving_coel"),
                        static_coel=s_coel_eff - off("static_coel"),
                        turntable=tt_machine,
                        pol_tx=pol_tx,
                        pol_rx=pol_rx,
                        radial_tx=t.r_ill - off("radial_tx"),
                        radial_rx=t.r_obs - off("radial_rx"),
                    )
                    try:
                        state.validate(cfg)
                    except AxisLimitError:
                        continue
                    candidates.append(state)

    if not candidates:
        if pol_fail:
            raise ReachabilityError(
                "polarization angle unreachable on all branches: "
                + "; ".join(sorted(set(pol_fail)))
            )
        raise ReachabilityError("no axis branch satisfies the machine limits")

    def cost(s: MachineState) -> tuple[float, float]:
        total = 0.0
        non_tt = 0.0
        for axis in AXES:
            d = abs(getattr(s, axis) - getattr(cur, axis))
            if axis == "turntable":
                d = abs(ang_diff(getattr(s, axis), getattr(cur, axis)))
            total += policy.weight(axis) * d
            if axis != "turntable":
                non_tt += d
        return (total, non_tt)

    candidates.sort(key=lambda s: (*cost(s), s.moving_coel, s.static_coel, s.moving_az))
    return candidates[0]
