"""Facility configuration: axis limits, geometry constants, motion limits.

Angles are degrees, lengths are meters throughout the public API.  The hall
frame has its origin at the focal point, x toward the static-gantry probe
azimuth zero, z up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

AXES = (
    "moving_az",
    "moving_coel",
    "static_coel",
    "turntable",
    "pol_tx",
    "pol_rx",
    "radial_tx",
    "radial_rx",
)

# Axis limits. ``None`` means unrestricted (the turntable wraps modulo 360).
DEFAULT_AXIS_LIMITS: dict[str, Optional[tuple[float, float]]] = {
    "moving_az": (-118.0, 66.0),
    "moving_coel": (-114.0, 114.0),
    "static_coel": (-115.0, 115.0),
    "turntable": None,
    "pol_tx": (-10.0, 188.0),
    "pol_rx": (-10.0, 188.0),
    "radial_tx": (3.38, 3.50),
    "radial_rx": (3.38, 3.50),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AxisMotionLimits:
    """Kinematic bounds of one axis (deg or m units, per second powers)."""

    v_max: float
    a_max: float
    d_max: float
    j_max: float

    def validate(self, axis: str) -> None:
        for name, val in (
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("d_max", self.d_max),
            ("j_max", self.j_max),
        ):
            if not val > 0:
                raise ConfigError(f"{axis}.{name} must be > 0, got {val}")


# Placeholder motor limits: the real drive parameters are not public, these
# are plausible desk-scale defaults, overridable via the config file.
DEFAULT_MOTION_LIMITS: dict[str, AxisMotionLimits] = {
    "moving_az": AxisMotionLimits(6.0, 3.0, 3.0, 6.0),
    "moving_coel": AxisMotionLimits(6.0, 3.0, 3.0, 6.0),
    "static_coel": AxisMotionLimits(6.0, 3.0, 3.0, 6.0),
    "turntable": AxisMotionLimits(10.0, 5.0, 5.0, 10.0),
    "pol_tx": AxisMotionLimits(20.0, 10.0, 10.0, 20.0),
    "pol_rx": AxisMotionLimits(20.0, 10.0, 10.0, 20.0),
    "radial_tx": AxisMotionLimits(0.01, 0.01, 0.01, 0.02),
    "radial_rx": AxisMotionLimits(0.01, 0.01, 0.01, 0.02),
}


@dataclass(frozen=True)
class BoomBoxParams:
    """Parametric collision geometry of one gantry.

    The boom is modeled as a quarter-ellipse chain of boxes from the pivot
    (at ``pivot_distance`` from the focal point, in the focal plane) to the
    arc tip at ``boom_tip_radius``, plus a pedestal under the pivot and a
    tip assembly box that spans the radial positioner and probe envelope
    from ``tip_inner_radius`` out to the arc tip.  The tip cross-section is
    sized to contain the probe at any roll angle, and the radial span covers
    the whole radial-axis travel, so neither axis can affect collisions.
    """

    pivot_distance: float = 4.2
    boom_tip_radius: float = 3.75
    boom_width: float = 0.40
    boom_thickness: float = 0.40
    n_boom_boxes: int = 5
    pedestal_width: float = 0.60
    pedestal_depth: float = 0.60
    tip_inner_radius: float = 3.0
    tip_cross: float = 0.45

    def validate(self, name: str) -> None:
        if self.pivot_distance <= 0 or self.boom_tip_radius <= 0:
            raise ConfigError(f"{name}: pivot/boom radii must be positive")
        if self.tip_inner_radius >= self.boom_tip_radius:
            raise ConfigError(f"{name}: tip_inner_radius must be < boom_tip_radius")
        if self.n_boom_boxes < 1:
            raise ConfigError(f"{name}: n_boom_boxes must be >= 1")


@dataclass(frozen=True)
class FacilityConfig:
    """Full mechanical description of the measurement range."""

    focal_height: float = 2.27
    boom_radius_nominal: float = 3.44
    radial_travel: float = 0.06
    probe_aperture_radius: float = 3.0
    turntable_diameter: float = 6.5
    # Boom azimuth offset branch per gantry: probe effective azimuth at
    # positive co-elevation is pedestal azimuth + sign*90 deg.  The sign per
    # side is not fixed by the machine layout, so both are configurable.
    tx_boom_offset_sign: int = 1
    rx_boom_offset_sign: int = 1
    axis_limits: Mapping[str, Optional[tuple[float, float]]] = field(
        default_factory=lambda: dict(DEFAULT_AXIS_LIMITS)
    )
    # Optional additive per-axis corrections (deformation-compensation hook).
    axis_offsets: Mapping[str, float] = field(default_factory=dict)
    motion_limits: Mapping[str, AxisMotionLimits] = field(
        default_factory=lambda: dict(DEFAULT_MOTION_LIMITS)
    )
    tx_boxes: BoomBoxParams = field(default_factory=BoomBoxParams)
    rx_boxes: BoomBoxParams = field(default_factory=BoomBoxParams)
    clearance: float = 0.10

    def __post_init__(self) -> None:
        if not self.focal_height > 0:
            raise ConfigError("focal_height must be > 0")
        if not self.boom_radius_nominal > 0.5:
            raise ConfigError("boom_radius_nominal implausibly small")
        if self.clearance < 0:
            raise ConfigError("clearance must be >= 0")
        if self.tx_boom_offset_sign not in (1, -1) or self.rx_boom_offset_sign not in (1, -1):
            raise ConfigError("boom offset signs must be +1 or -1")
        for axis in AXES:
            lim = self.axis_limits.get(axis)
            if lim is not None and not lim[0] < lim[1]:
                raise ConfigError(f"empty limit interval for {axis}: {lim}")
        for axis, ml in self.motion_limits.items():
            ml.validate(axis)
        self.tx_boxes.validate("tx_boxes")
        self.rx_boxes.validate("rx_boxes")

    # The static gantry pedestal sits so that its probe reaches effective
    # azimuth 0 at positive co-elevation (hall-frame convention).
    @property
    def static_pedestal_azimuth(self) -> float:
        return -90.0 * self.rx_boom_offset_sign

    def limit(self, axis: str) -> Optional[tuple[float, float]]:
        return self.axis_limits.get(axis)

    def offset(self, axis: str) -> float:
        return float(self.axis_offsets.get(axis, 0.0))


def _coerce(value: str):
    try:
        return int(value) if value.strip().lstrip("+-").isdigit() else float(value)
    except ValueError:
        return value.strip()


def parse_config_text(text: str) -> FacilityConfig:
    """Parse the flat ``key = value`` facility config format.

    Grammar: one ``key = value`` pair per line; ``#`` starts a comment;
    blank lines ignored.  Dotted keys address nested settings, e.g.
    ``limit.moving_az.min``, ``offset.turntable``, ``motion.turntable.v_max``,
    ``boxes.tx.pivot_distance``.  Unknown keys are an error.
    """
    scalars: dict[str, float] = {}
    limits = {k: v for k, v in DEFAULT_AXIS_LIMITS.items()}
    offsets: dict[str, float] = {}
    motion = dict(DEFAULT_MOTION_LIMITS)
    boxes = {"tx": {}, "rx": {}}
    signs: dict[str, int] = {}

    scalar_keys = {
        "focal_height",
        "boom_radius_nominal",
        "radial_travel",
        "probe_aperture_radius",
        "turntable_diameter",
        "clearance",
    }

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        val = _coerce(value)
        if isinstance(val, str):
            raise ConfigError(f"line {lineno}: non-numeric value for {key}: {value.strip()!r}")

        parts = key.split(".")
        if key in scalar_keys:
            scalars[key] = float(val)
        elif parts[0] == "limit" and len(parts) == 3 and parts[1] in AXES and parts[2] in ("min", "max"):
            axis = parts[1]
            cur = limits.get(axis) or (-math.inf, math.inf)
            limits[axis] = (float(val), cur[1]) if parts[2] == "min" else (cur[0], float(val))
        elif parts[0] == "offset" and len(parts) == 2 and parts[1] in AXES:
            offsets[parts[1]] = float(val)
        elif parts[0] == "motion" and len(parts) == 3 and parts[1] in AXES:
            cur = motion[parts[1]]
            if parts[2] not in ("v_max", "a_max", "d_max", "j_max"):
                raise ConfigError(f"line {lineno}: unknown motion field {parts[2]}")
            motion[parts[1]] = replace(cur, **{parts[2]: float(val)})
        elif parts[0] == "boom" and len(parts) == 3 and parts[1] in ("tx", "rx") and parts[2] == "offset_sign":
            signs[parts[1]] = int(val)
        elif parts[0] == "boxes" and len(parts) == 3 and parts[1] in ("tx", "rx"):
            boxes[parts[1]][parts[2]] = int(val) if parts[2] == "n_boom_boxes" else float(val)
        else:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")

    kwargs = dict(scalars)
    kwargs["axis_limits"] = limits
    kwargs["axis_offsets"] = offsets
    kwargs["motion_limits"] = motion
    if "tx" in signs:
        kwargs["tx_boom_offset_sign"] = signs["tx"]
    if "rx" in signs:
        kwargs["rx_boom_offset_sign"] = signs["rx"]
    kwargs["tx_boxes"] = BoomBoxParams(**boxes["tx"])
    kwargs["rx_boxes"] = BoomBoxParams(**boxes["rx"])
    return FacilityConfig(**kwargs)


def load_config(path) -> FacilityConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def dump_config_text(cfg: FacilityConfig) -> str:
    lines = ["# facility configuration (angles deg, lengths m)"]
    for key in (
        "focal_height",
        "boom_radius_nominal",
        "radial_travel",
        "probe_aperture_radius",
        "turntable_diameter",
        "clearance",
    ):
        lines.append(f"{key} = {getattr(cfg, key)!r}")
    lines.append(f"boom.tx.offset_sign = {cfg.tx_boom_offset_sign}")
    lines.append(f"boom.rx.offset_sign = {cfg.rx_boom_offset_sign}")
    for axis in AXES:
        lim = cfg.limit(axis)
        if lim is not None:
            lines.append(f"limit.{axis}.min = {lim[0]!r}")
            lines.append(f"limit.{axis}.max = {lim[1]!r}")
        if cfg.offset(axis):
            lines.append(f"offset.{axis} = {cfg.offset(axis)!r}")
    for axis, ml in cfg.motion_limits.items():
        for f_ in ("v_max", "a_max", "d_max", "j_max"):
            lines.append(f"motion.{axis}.{f_} = {getattr(ml, f_)!r}")
    for side in ("tx", "rx"):
        bp: BoomBoxParams = getattr(cfg, f"{side}_boxes")
        for f_ in (
            "pivot_distance",
            "boom_tip_radius",
            "boom_width",
            "boom_thickness",
            "n_boom_boxes",
            "pedestal_width",
            "pedestal_depth",
            "tip_inner_radius",
            "tip_cross",
        ):
            lines.append(f"boxes.{side}.{f_} = {getattr(bp, f_)!r}")
    return "\n".join(lines) + "\n"
